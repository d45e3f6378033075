#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "dtreg/loss.hpp"
#include "dtreg/optimizer.hpp"
#include "dtreg/rng.hpp"
#include "dtreg/sample.hpp"

namespace dtreg {

// Gamma(shape, rate) multipliers. The defaults give mean 1/2 and variance 1,
// i.e. variance = 4 * mean^2.
struct PerturbationLaw {
  double shape = 0.25;
  double rate = 0.5;

  double mean() const { return shape / rate; }
  double variance() const { return shape / (rate * rate); }
};

PerturbationWeights draw_perturbation(std::size_t n, const PerturbationLaw& law, Rng& rng);

// Produces the weights for one replicate from that replicate's own stream.
using WeightSource = std::function<PerturbationWeights(std::size_t n, Rng& rng)>;

struct ResampleSummary {
  std::size_t B = 0;  // replicates requested
  // Successful replicates, in replicate order.
  std::vector<std::vector<double>> replicates;
  std::vector<std::size_t> replicate_index;
  std::vector<std::size_t> failed;
  std::vector<double> cov;  // p x p row-major, divisor (count - 1)
  std::vector<double> se;
  bool valid = false;  // false when more than 5% of replicates failed
};

// Which estimator the replicates re-run.
enum class ResampleTarget { Fitted, Naive };

struct ResampleOptions {
  std::size_t B = 500;
  PerturbationLaw law;
  std::uint64_t seed = 1;
  ResampleTarget target = ResampleTarget::Fitted;
};

// The estimator of `fit` recomputed with perturbed pair weights, following the
// same algorithm: perturbed Wilcoxon minimization from the point estimate,
// followed for log-rank by the same number of perturbed log-rank iterations.
std::vector<double> perturbed_estimate(const TruncatedSample& sample, const FitResult& fit,
                                       const FitOptions& opts, const PerturbationWeights& w);

// Perturbed minimizer of the untruncated loss, started from the naive fit.
std::vector<double> perturbed_naive_estimate(const TruncatedSample& sample,
                                             const FitResult& naive,
                                             const SimplexOptions& opts,
                                             const PerturbationWeights& w);

// Replicate b draws its weights from make_stream(seed, b), so serial and
// parallel runs agree exactly.
ResampleSummary resample(const TruncatedSample& sample, const FitResult& fit,
                         const FitOptions& opts, const ResampleOptions& ropts);

ResampleSummary resample_with(const TruncatedSample& sample, const FitResult& fit,
                              const FitOptions& opts, std::size_t B, std::uint64_t seed,
                              const WeightSource& source,
                              ResampleTarget target = ResampleTarget::Fitted);

// Empirical covariance of the replicates; se is the diagonal square root.
void summarize_replicates(ResampleSummary& summary, std::size_t p);

// q-quantile (type 7 interpolation) of coordinate j across replicates.
double replicate_quantile(const ResampleSummary& summary, std::size_t j, double q);

// Whether argmin of the perturbed objective is unchanged (within x_tol) when
// every weight is multiplied by c.
bool scale_invariance_check(const TruncatedSample& sample, const FitResult& fit,
                            const FitOptions& opts, const PerturbationWeights& w, double c);

struct Interval {
  double lo;
  double hi;
};

Interval wald_interval(double estimate, double se, double level);

enum class Sided { OneSidedGreater, TwoSided };

Sided parse_sided(const std::string& name);
const char* to_string(Sided s);

struct WaldTest {
  double statistic;
  double p_value;
};

WaldTest wald_test(double estimate, double se, Sided sided);

double normal_quantile(double q);
double normal_cdf(double x);

// CSV `b,beta_1,...,beta_p`, one row per successful replicate.
void write_replicates_csv(std::ostream& out, const ResampleSummary& summary);

}  // namespace dtreg
