#pragma once

#include <span>
#include <vector>

#include "dtreg/kernels.hpp"
#include "dtreg/sample.hpp"

namespace dtreg {

// Wilcoxon: w_ij = 1. LogRank: w_ij(b) = psi_n(b, e_i(b) ^ e_j(b)) with
// psi_n(b, t) the reciprocal of #{k : e_k(b) >= t}.
enum class WeightScheme { Wilcoxon, LogRank };

const char* to_string(WeightScheme scheme);
WeightScheme parse_weight_scheme(const std::string& name);

// Nonnegative multipliers W_1..W_n; pair (i, j) is scaled by W_i + W_j.
class PerturbationWeights {
 public:
  explicit PerturbationWeights(std::vector<double> w);

  std::span<const double> values() const { return w_; }
  std::size_t size() const { return w_.size(); }

 private:
  std::vector<double> w_;
};

// Admissible range for e_i(b) - e_j(b): the pair is comparable exactly when
// the difference lies strictly inside (lo, hi). lo < 0 < hi always.
struct PairWindow {
  double lo;
  double hi;
};

PairWindow pair_window(const Observation& obs_i, const Observation& obs_j);

// |min(max(e_i - e_j, lo), hi)|; the summand of the loss.
double clipped_pair_term(const Observation& obs_i, const Observation& obs_j,
                         std::span<const double> beta);

// Sum of clipped_pair_term over all ordered pairs. With infinite bounds this
// is the untruncated sum of |e_i - e_j|.
double loss(const TruncatedSample& sample, std::span<const double> beta,
            Exec exec = Exec::Parallel);

// L_j(b) < e_i(b) < R_j(b) and L_i(b) < e_j(b) < R_i(b).
bool comparable(const Observation& obs_i, const Observation& obs_j,
                std::span<const double> beta);
// lo < e_i(b) - e_j(b) < hi. Equivalent to comparable(); kept separate so
// the equivalence can be checked.
bool comparable_by_window(const Observation& obs_i, const Observation& obs_j,
                          std::span<const double> beta);

// Weighted estimating function at beta with weights evaluated at anchor:
//   sum_ij w_ij(anchor) 1{comparable(i, j, beta)} (x_i - x_j) sgn(e_i - e_j)
// with sgn(0) = 0. The anchor is ignored for Wilcoxon weights.
std::vector<double> score(const TruncatedSample& sample, std::span<const double> beta,
                          WeightScheme scheme, std::span<const double> anchor,
                          const PerturbationWeights* perturbation = nullptr,
                          Exec exec = Exec::Parallel);

// psi_n evaluated at t: 1 / #{i : e_i >= t}. Throws when no residual is >= t.
double logrank_weight(const ResidualFrame& frame, double t);

// sum_ij m_ij w_ij(anchor) |clip(e_i(beta) - e_j(beta))| with
// m_ij = W_i + W_j when perturbed, else 1.
double weighted_loss(const TruncatedSample& sample, std::span<const double> beta,
                     std::span<const double> anchor, WeightScheme scheme,
                     const PerturbationWeights* perturbation = nullptr,
                     Exec exec = Exec::Parallel);

// sum_ij 1{comparable(i, j, anchor)} |e_i(beta) - e_j(beta)|, convex in beta.
double iterative_loss(const TruncatedSample& sample, std::span<const double> beta,
                      std::span<const double> anchor,
                      const PerturbationWeights* perturbation = nullptr,
                      Exec exec = Exec::Parallel);

// sum_ij m_ij |e_i(beta) - e_j(beta)| ignoring the bounds, in O(n log n).
double untruncated_loss(const TruncatedSample& sample, std::span<const double> beta,
                        const PerturbationWeights* perturbation = nullptr);

// A loss surface with its anchor-dependent pair weights frozen, so repeated
// evaluation inside an optimizer costs one pair sweep. Holds a reference to
// the sample, which must outlive it.
class PairObjective {
 public:
  enum class Kind { Clipped, Comparable, Untruncated };

  static PairObjective clipped(const TruncatedSample& sample, WeightScheme scheme,
                               std::span<const double> anchor,
                               const PerturbationWeights* perturbation = nullptr,
                               Exec exec = Exec::Parallel);
  static PairObjective iterative(const TruncatedSample& sample,
                                 std::span<const double> anchor,
                                 const PerturbationWeights* perturbation = nullptr,
                                 Exec exec = Exec::Parallel);
  static PairObjective untruncated(const TruncatedSample& sample,
                                   const PerturbationWeights* perturbation = nullptr);

  double operator()(std::span<const double> beta) const;

  // sum_ij m_ij w_ij, the total pair weight. Dividing by it puts objectives
  // of different sizes and weightings on a common O(1) scale.
  double mass() const { return mass_; }
  Kind kind() const { return kind_; }
  const TruncatedSample& sample() const { return *sample_; }

 private:
  PairObjective(const TruncatedSample& sample, Kind kind, Exec exec)
      : sample_(&sample), kind_(kind), exec_(exec) {}

  PairWeights weights() const { return {perturbation_, psi_}; }

  const TruncatedSample* sample_;
  Kind kind_;
  Exec exec_;
  std::vector<double> perturbation_;
  std::vector<double> psi_;
  std::vector<double> anchor_e_;
  double mass_ = 1.0;
};

}  // namespace dtreg
