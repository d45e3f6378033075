#include "dtreg/inference.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

#include "dtreg/error.hpp"

namespace dtreg {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> perturbed_iterations(const TruncatedSample& sample, const FitResult& fit,
                                         const FitOptions& opts, const PerturbationWeights& w) {
  const std::size_t wilcoxon_count = fit.iterates.size() - fit.logrank_steps;
  if (fit.iterates.empty() || wilcoxon_count == 0)
    throw InputError("fit result carries no iterates to resample from");

  std::vector<double> current;
  if (opts.strategy == Strategy::DirectSimplex) {
    // Start from the unperturbed Wilcoxon answer.
    const auto& start = fit.iterates[wilcoxon_count - 1];
    const auto objective =
        PairObjective::clipped(sample, WeightScheme::Wilcoxon, start, &w, Exec::Serial);
    current = minimize(objective, start, opts.simplex).argmin;
  } else {
    const auto naive_obj = PairObjective::untruncated(sample, &w);
    current = minimize(naive_obj, fit.iterates.front(), opts.simplex).argmin;
    // Same number of L1 iterations as the point estimate used.
    for (std::size_t k = 1; k < wilcoxon_count; ++k) {
      const auto objective = PairObjective::iterative(sample, current, &w, Exec::Serial);
      current = minimize(objective, current, opts.simplex).argmin;
    }
  }

  for (std::size_t k = 0; k < fit.logrank_steps; ++k) {
    const auto objective =
        PairObjective::clipped(sample, WeightScheme::LogRank, current, &w, Exec::Serial);
    current = minimize(objective, current, opts.simplex).argmin;
  }
  return current;
}

}  // namespace

PerturbationWeights draw_perturbation(std::size_t n, const PerturbationLaw& law, Rng& rng) {
  if (!(law.shape > 0.0) || !(law.rate > 0.0))
    throw InputError("perturbation law needs positive shape and rate");
  std::gamma_distribution<double> gamma(law.shape, 1.0 / law.rate);
  std::vector<double> w(n);
  for (double& v : w) v = gamma(rng);
  return PerturbationWeights(std::move(w));
}

std::vector<double> perturbed_estimate(const TruncatedSample& sample, const FitResult& fit,
                                       const FitOptions& opts, const PerturbationWeights& w) {
  return perturbed_iterations(sample, fit, opts, w);
}

std::vector<double> perturbed_naive_estimate(const TruncatedSample& sample,
                                             const FitResult& naive,
                                             const SimplexOptions& opts,
                                             const PerturbationWeights& w) {
  const auto objective = PairObjective::untruncated(sample, &w);
  return minimize(objective, naive.beta_hat, opts).argmin;
}

void summarize_replicates(ResampleSummary& summary, std::size_t p) {
  const std::size_t m = summary.replicates.size();
  summary.cov.assign(p * p, kNaN);
  summary.se.assign(p, kNaN);
  if (m < 2) return;
  // Centered on the first replicate, so identical replicates give exact zeros.
  const auto& origin = summary.replicates.front();
  std::vector<double> mean(p, 0.0);
  for (const auto& r : summary.replicates)
    for (std::size_t k = 0; k < p; ++k) mean[k] += r[k] - origin[k];
  for (double& v : mean) v /= static_cast<double>(m);
  std::fill(summary.cov.begin(), summary.cov.end(), 0.0);
  for (const auto& r : summary.replicates) {
    for (std::size_t a = 0; a < p; ++a) {
      const double da = (r[a] - origin[a]) - mean[a];
      for (std::size_t b = 0; b < p; ++b)
        summary.cov[a * p + b] += da * ((r[b] - origin[b]) - mean[b]);
    }
  }
  for (double& v : summary.cov) v /= static_cast<double>(m - 1);
  for (std::size_t k = 0; k < p; ++k) summary.se[k] = std::sqrt(summary.cov[k * p + k]);
}

ResampleSummary resample_with(const TruncatedSample& sample, const FitResult& fit,
                              const FitOptions& opts, std::size_t B, std::uint64_t seed,
                              const WeightSource& source, ResampleTarget target) {
  if (B == 0) throw InputError("number of replicates must be positive");
  const std::size_t p = sample.dim();
  std::vector<std::vector<double>> results(B);
  std::vector<char> ok(B, 0);

  const auto nb = static_cast<std::ptrdiff_t>(B);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    try {
      Rng rng = make_stream(seed, static_cast<std::uint64_t>(b));
      const PerturbationWeights w = source(sample.size(), rng);
      results[b] = target == ResampleTarget::Naive
                       ? perturbed_naive_estimate(sample, fit, opts.simplex, w)
                       : perturbed_estimate(sample, fit, opts, w);
      ok[b] = 1;
    } catch (const std::exception&) {
      ok[b] = 0;
    }
  }

  ResampleSummary summary;
  summary.B = B;
  for (std::size_t b = 0; b < B; ++b) {
    if (ok[b]) {
      summary.replicates.push_back(std::move(results[b]));
      summary.replicate_index.push_back(b);
    } else {
      summary.failed.push_back(b);
    }
  }
  summarize_replicates(summary, p);
  summary.valid = summary.replicates.size() >= 2 &&
                  static_cast<double>(summary.failed.size()) <= 0.05 * static_cast<double>(B);
  return summary;
}

ResampleSummary resample(const TruncatedSample& sample, const FitResult& fit,
                         const FitOptions& opts, const ResampleOptions& ropts) {
  const PerturbationLaw law = ropts.law;
  if (!(law.shape > 0.0) || !(law.rate > 0.0))
    throw InputError("perturbation law needs positive shape and rate");
  return resample_with(
      sample, fit, opts, ropts.B, ropts.seed,
      [law](std::size_t n, Rng& rng) { return draw_perturbation(n, law, rng); }, ropts.target);
}

double replicate_quantile(const ResampleSummary& summary, std::size_t j, double q) {
  if (summary.replicates.empty()) throw InputError("no replicates");
  if (!(q >= 0.0 && q <= 1.0)) throw InputError("quantile level must lie in [0, 1]");
  std::vector<double> v;
  v.reserve(summary.replicates.size());
  for (const auto& r : summary.replicates) v.push_back(r.at(j));
  std::sort(v.begin(), v.end());
  const double h = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

bool scale_invariance_check(const TruncatedSample& sample, const FitResult& fit,
                            const FitOptions& opts, const PerturbationWeights& w, double c) {
  if (!(c > 0.0)) throw InputError("scale factor must be positive");
  std::vector<double> scaled(w.values().begin(), w.values().end());
  for (double& v : scaled) v *= c;
  const auto a = perturbed_estimate(sample, fit, opts, w);
  const auto b = perturbed_estimate(sample, fit, opts, PerturbationWeights(std::move(scaled)));
  for (std::size_t k = 0; k < a.size(); ++k)
    if (std::fabs(a[k] - b[k]) > opts.simplex.x_tol) return false;
  return true;
}

double normal_quantile(double q) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), q);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

Interval wald_interval(double estimate, double se, double level) {
  if (!(level > 0.0 && level < 1.0)) throw InputError("confidence level must lie in (0, 1)");
  if (!(se > 0.0)) throw InputError("standard error must be positive");
  const double z = normal_quantile(0.5 + 0.5 * level);
  return {estimate - z * se, estimate + z * se};
}

Sided parse_sided(const std::string& name) {
  if (name == "greater" || name == "one-sided") return Sided::OneSidedGreater;
  if (name == "two-sided" || name == "two") return Sided::TwoSided;
  throw InputError("unknown test side '" + name + "'");
}

const char* to_string(Sided s) {
  return s == Sided::OneSidedGreater ? "greater" : "two-sided";
}

WaldTest wald_test(double estimate, double se, Sided sided) {
  if (!(se > 0.0)) throw InputError("standard error must be positive");
  const double z = estimate / se;
  // Upper tail via erfc keeps precision far into the tail.
  const double upper = 0.5 * std::erfc(z / std::sqrt(2.0));
  if (sided == Sided::OneSidedGreater) return {z, upper};
  const double tail = 0.5 * std::erfc(std::fabs(z) / std::sqrt(2.0));
  return {z, std::min(1.0, 2.0 * tail)};
}

void write_replicates_csv(std::ostream& out, const ResampleSummary& summary) {
  const std::size_t p = summary.replicates.empty() ? 0 : summary.replicates.front().size();
  out << 'b';
  for (std::size_t k = 0; k < p; ++k) out << ",beta_" << (k + 1);
  out << '\n';
  char buf[64];
  for (std::size_t r = 0; r < summary.replicates.size(); ++r) {
    out << summary.replicate_index[r] + 1;
    for (double v : summary.replicates[r]) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
      out << ',' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
    }
    out << '\n';
  }
}

}  // namespace dtreg
