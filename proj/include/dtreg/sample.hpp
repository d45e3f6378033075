#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace dtreg {

// One observed record: response y with covariates x, seen because l < y < r.
// l = -inf or r = +inf encodes "no truncation on that side".
struct Observation {
  double y = 0.0;
  std::vector<double> x;
  double l = 0.0;
  double r = 0.0;
};

// A validated, immutable collection of observations sharing covariate
// dimension p. Besides the records it keeps flat column copies that the pair
// kernels stream over.
class TruncatedSample {
 public:
  std::size_t size() const { return obs_.size(); }
  std::size_t dim() const { return p_; }

  const Observation& operator[](std::size_t i) const { return obs_[i]; }
  std::span<const Observation> observations() const { return obs_; }

  std::span<const double> y() const { return y_; }
  // Row-major n x p covariate matrix.
  std::span<const double> covariates() const { return x_; }
  std::span<const double> x(std::size_t i) const {
    return std::span<const double>(x_).subspan(i * p_, p_);
  }
  // l_i - y_i (strictly negative) and r_i - y_i (strictly positive).
  std::span<const double> lower_gap() const { return lower_gap_; }
  std::span<const double> upper_gap() const { return upper_gap_; }

  // True when every bound is infinite, i.e. the data are untruncated.
  bool untruncated() const { return untruncated_; }

 private:
  friend TruncatedSample validate_sample(std::vector<Observation> raw);

  std::vector<Observation> obs_;
  std::size_t p_ = 0;
  std::vector<double> y_;
  std::vector<double> x_;
  std::vector<double> lower_gap_;
  std::vector<double> upper_gap_;
  bool untruncated_ = false;
};

// Residuals e_i(b) = y_i - b'x_i with the bounds shifted by the same amount.
struct ResidualFrame {
  std::vector<double> e;
  std::vector<double> lb;
  std::vector<double> rb;
  std::vector<double> beta;
};

// Checks strict l < y < r and finite values of a common dimension. Throws
// InputError naming the first offending record.
TruncatedSample validate_sample(std::vector<Observation> raw);

ResidualFrame residuals(const TruncatedSample& sample,
                        std::span<const double> beta);

// b'x_i for every record.
std::vector<double> linear_predictor(const TruncatedSample& sample,
                                     std::span<const double> beta);

// Same sample with every bound replaced by -inf / +inf.
TruncatedSample drop_truncation(const TruncatedSample& sample);

// CSV with header `y,l,r,x1,...,xp`; bounds may be written `-inf` / `inf`.
TruncatedSample read_sample_csv(std::istream& in);
TruncatedSample read_sample_csv(const std::string& path);
void write_sample_csv(std::ostream& out, const TruncatedSample& sample);

// Parses a CSV number, accepting inf / -inf / +inf spellings.
double parse_real(const std::string& field);

}  // namespace dtreg
