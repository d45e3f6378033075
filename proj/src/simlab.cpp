#include "dtreg/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "dtreg/error.hpp"

namespace dtreg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Uniform on the open interval (0, 1), from the top 53 bits.
double open_uniform(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

struct Draw {
  double x1, x2, y, u_left, u_right;
};

Draw draw_latent(const SimDesign& d, Rng& rng) {
  Draw a;
  a.x1 = open_uniform(rng) < 0.5 ? 1.0 : 0.0;
  a.x2 = 2.0 * open_uniform(rng);
  const double eps = draw_error(d.error, rng);
  a.y = d.beta0[0] * a.x1 + d.beta0[1] * a.x2 + eps;
  a.u_left = open_uniform(rng);
  a.u_right = open_uniform(rng);
  return a;
}

double pivot(const SimDesign& d, const Draw& a) {
  return d.truncation == TruncationScheme::CovariateDependent ? a.x1 + 0.5 * a.x2 : 1.0;
}

// L ~ U[c, m] and R ~ U[m, c'] as affine maps of the stored uniforms.
double left_bound(double c, double m, double u) { return c + (m - c) * u; }
double right_bound(double m, double c, double u) { return m + (c - m) * u; }

}  // namespace

const char* to_string(ErrorLaw law) {
  switch (law) {
    case ErrorLaw::Normal: return "normal";
    case ErrorLaw::Logistic: return "logistic";
    case ErrorLaw::ExtremeMinValue: return "ev";
  }
  return "?";
}

const char* to_string(TruncationScheme scheme) {
  switch (scheme) {
    case TruncationScheme::CovariateIndependent: return "independent";
    case TruncationScheme::CovariateDependent: return "dependent";
    case TruncationScheme::None: return "none";
  }
  return "?";
}

ErrorLaw parse_error_law(const std::string& name) {
  if (name == "normal") return ErrorLaw::Normal;
  if (name == "logistic") return ErrorLaw::Logistic;
  if (name == "ev" || name == "extreme-min-value" || name == "gumbel-min")
    return ErrorLaw::ExtremeMinValue;
  throw InputError("unknown error law '" + name + "'");
}

TruncationScheme parse_truncation_scheme(const std::string& name) {
  if (name == "independent" || name == "covariate-independent")
    return TruncationScheme::CovariateIndependent;
  if (name == "dependent" || name == "covariate-dependent")
    return TruncationScheme::CovariateDependent;
  if (name == "none") return TruncationScheme::None;
  throw InputError("unknown truncation scheme '" + name + "'");
}

double draw_error(ErrorLaw law, Rng& rng) {
  switch (law) {
    case ErrorLaw::Normal: {
      std::normal_distribution<double> normal(0.0, 1.0);
      return normal(rng);
    }
    case ErrorLaw::Logistic: {
      const double u = open_uniform(rng);
      return std::log(u / (1.0 - u));
    }
    case ErrorLaw::ExtremeMinValue:
      // Inverse of F(x) = 1 - exp(-exp(x)) applied to 1 - U.
      return std::log(-std::log(open_uniform(rng)));
  }
  return 0.0;
}

void SimDesign::validate() const {
  if (n < 2) throw InputError("simulated sample size must be at least 2");
  if (beta0.size() != 2) throw InputError("simulation design has two covariates; beta0 needs length 2");
  switch (truncation) {
    case TruncationScheme::CovariateIndependent:
      if (!(lower_const < 1.0) || !(upper_const > 1.0))
        throw InputError("covariate-independent truncation needs c1 < 1 < c2");
      break;
    case TruncationScheme::CovariateDependent:
      if (!(lower_const < 0.0) || !(upper_const > 2.0))
        throw InputError("covariate-dependent truncation needs c3 < 0 and c4 > 2");
      break;
    case TruncationScheme::None:
      break;
  }
}

TruncatedSample generate_dataset(const SimDesign& design, Rng& rng, GenerationStats* stats) {
  design.validate();
  constexpr std::size_t kCheckAfter = 1000000;
  GenerationStats local;
  std::vector<Observation> obs;
  obs.reserve(design.n);
  while (obs.size() < design.n) {
    const Draw a = draw_latent(design, rng);
    ++local.attempts;
    double l = -kInf;
    double r = kInf;
    if (design.truncation != TruncationScheme::None) {
      const double m = pivot(design, a);
      l = left_bound(design.lower_const, m, a.u_left);
      r = right_bound(m, design.upper_const, a.u_right);
    }
    if (a.y <= l) {
      ++local.left_truncated;
    } else if (a.y >= r) {
      ++local.right_truncated;
    } else {
      obs.push_back(Observation{a.y, {a.x1, a.x2}, l, r});
    }
    if (local.attempts >= kCheckAfter &&
        static_cast<double>(obs.size()) < 0.01 * static_cast<double>(local.attempts))
      throw InputError("acceptance rate below 1%; truncation constants look misconfigured");
  }
  if (stats != nullptr) *stats = local;
  return validate_sample(std::move(obs));
}

TruncationRates truncation_rates(const SimDesign& design, std::size_t attempts, Rng& rng) {
  design.validate();
  if (attempts == 0) throw InputError("need at least one attempt");
  std::size_t left = 0, right = 0;
  for (std::size_t k = 0; k < attempts; ++k) {
    const Draw a = draw_latent(design, rng);
    if (design.truncation == TruncationScheme::None) continue;
    const double m = pivot(design, a);
    if (a.y <= left_bound(design.lower_const, m, a.u_left)) {
      ++left;
    } else if (a.y >= right_bound(m, design.upper_const, a.u_right)) {
      ++right;
    }
  }
  const double total = static_cast<double>(attempts);
  return {static_cast<double>(left) / total, static_cast<double>(right) / total};
}

Calibration calibrate_truncation(const SimDesign& design, const CalibrationOptions& opts) {
  if (design.truncation == TruncationScheme::None)
    throw InputError("nothing to calibrate without truncation");
  if (opts.attempts == 0) throw InputError("need at least one attempt");
  if (!(opts.target_left >= 0.0 && opts.target_right >= 0.0 &&
        opts.target_left + opts.target_right < 1.0))
    throw InputError("truncation targets must be nonnegative and sum below 1");

  SimDesign d = design;
  d.truncation = design.truncation;
  d.lower_const = design.truncation == TruncationScheme::CovariateDependent ? -1.0 : 0.0;
  d.upper_const = 3.0;

  Rng rng = make_stream(opts.seed, 0xca11b);
  std::vector<Draw> draws(opts.attempts);
  for (auto& a : draws) a = draw_latent(d, rng);

  // Each side is calibrated on its own; the other bound is ignored, so the
  // rates are marginal probabilities (the events are disjoint).
  auto left_rate = [&](double c) {
    std::size_t hits = 0;
    for (const auto& a : draws)
      if (a.y <= left_bound(c, pivot(d, a), a.u_left)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(draws.size());
  };
  auto right_rate = [&](double c) {
    std::size_t hits = 0;
    for (const auto& a : draws)
      if (a.y >= right_bound(pivot(d, a), c, a.u_right)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(draws.size());
  };

  const bool dependent = design.truncation == TruncationScheme::CovariateDependent;
  // Left rate increases toward the upper limit of c; right rate decreases
  // away from its lower limit.
  const double left_cap = dependent ? 0.0 : 1.0;
  const double right_floor = dependent ? 2.0 : 1.0;
  constexpr double kReach = 1e7;
  constexpr int kSteps = 60;

  auto solve = [&](auto&& rate, double target, double near, double sign) {
    // rate(near + sign * t) is monotone in t > 0 (decreasing); find t.
    double t_lo = 0.0;
    double t_hi = 1.0;
    while (rate(near + sign * t_hi) > target && t_hi < kReach) t_hi *= 2.0;
    for (int s = 0; s < kSteps; ++s) {
      const double mid = 0.5 * (t_lo + t_hi);
      if (rate(near + sign * mid) > target)
        t_lo = mid;
      else
        t_hi = mid;
    }
    const double r_hi = rate(near + sign * t_hi);
    double t = t_hi;
    if (t_lo > 0.0 && std::fabs(rate(near + sign * t_lo) - target) < std::fabs(r_hi - target))
      t = t_lo;
    // The constant must stay strictly on its side of the pivot.
    t = std::max(t, 1e-9);
    return near + sign * t;
  };

  Calibration out;
  out.lower_const = solve(left_rate, opts.target_left, left_cap, -1.0);
  out.upper_const = solve(right_rate, opts.target_right, right_floor, 1.0);

  SimDesign check = design;
  check.lower_const = out.lower_const;
  check.upper_const = out.upper_const;
  Rng verify = make_stream(opts.seed, 0xc4ec);
  out.achieved = truncation_rates(check, opts.attempts, verify);
  out.reached = std::fabs(out.achieved.left - opts.target_left) <= opts.tolerance &&
                std::fabs(out.achieved.right - opts.target_right) <= opts.tolerance;
  return out;
}

const char* to_string(Estimator e) {
  switch (e) {
    case Estimator::Naive: return "naive";
    case Estimator::Wilcoxon: return "wilcoxon";
    case Estimator::LogRank: return "logrank";
  }
  return "?";
}

Estimator parse_estimator(const std::string& name) {
  if (name == "naive") return Estimator::Naive;
  if (name == "wilcoxon") return Estimator::Wilcoxon;
  if (name == "logrank" || name == "log-rank") return Estimator::LogRank;
  throw InputError("unknown estimator '" + name + "'");
}

const ReportRow& SimulationReport::row(Estimator e, std::size_t parameter) const {
  for (const auto& r : rows)
    if (r.estimator == e && r.parameter == parameter) return r;
  throw InputError(std::string("report has no row for ") + to_string(e));
}

namespace {

ReplicationRecord run_replication(const SimDesign& design, const StudyOptions& opts,
                                  std::size_t index) {
  ReplicationRecord rec;
  rec.index = index;
  Rng rng = make_stream(design.seed, index, 0);
  const TruncatedSample sample = generate_dataset(design, rng);
  // One resampling seed per replication, shared by all estimators.
  const std::uint64_t resample_seed = make_stream(design.seed, index, 1)();

  FitOptions wil_opts = opts.fit;
  wil_opts.scheme = WeightScheme::Wilcoxon;
  wil_opts.logrank_until_converged = false;
  FitOptions lr_opts = wil_opts;
  lr_opts.scheme = WeightScheme::LogRank;

  std::optional<FitResult> wilcoxon;
  auto wilcoxon_fit = [&]() -> const FitResult& {
    if (!wilcoxon) wilcoxon = fit(sample, wil_opts);
    return *wilcoxon;
  };

  auto resampled = [&](const FitResult& f, const FitOptions& fo, ResampleTarget target,
                       EstimatorRun& run) {
    if (opts.B == 0) return;
    ResampleOptions ro;
    ro.B = opts.B;
    ro.law = opts.law;
    ro.seed = resample_seed;
    ro.target = target;
    const ResampleSummary s = resample(sample, f, fo, ro);
    run.se = s.se;
    run.resample_valid = s.valid;
  };

  for (Estimator e : opts.estimators) {
    EstimatorRun run;
    switch (e) {
      case Estimator::Naive: {
        const FitResult f = naive_fit(sample, opts.fit.simplex);
        run.estimate = f.beta_hat;
        resampled(f, wil_opts, ResampleTarget::Naive, run);
        break;
      }
      case Estimator::Wilcoxon: {
        const FitResult& f = wilcoxon_fit();
        run.estimate = f.beta_hat;
        resampled(f, wil_opts, ResampleTarget::Fitted, run);
        break;
      }
      case Estimator::LogRank: {
        const FitResult f = logrank_iterate(sample, wilcoxon_fit(), lr_opts);
        run.estimate = f.beta_hat;
        resampled(f, lr_opts, ResampleTarget::Fitted, run);
        if (opts.compare_convergence) {
          FitOptions conv = lr_opts;
          conv.logrank_until_converged = true;
          const FitResult c = logrank_iterate(sample, f, conv);
          rec.logrank_converged = c.beta_hat;
          rec.logrank_converged_steps = c.logrank_steps;
        }
        break;
      }
    }
    rec.runs.push_back(std::move(run));
  }
  rec.ok = true;
  return rec;
}

}  // namespace

std::vector<ReportRow> summarize_study(const SimDesign& design, const StudyOptions& opts,
                                       const std::vector<ReplicationRecord>& records) {
  const std::size_t p = design.beta0.size();
  const double z = normal_quantile(0.5 + 0.5 * opts.level);
  std::vector<ReportRow> rows;
  for (std::size_t ei = 0; ei < opts.estimators.size(); ++ei) {
    for (std::size_t j = 0; j < p; ++j) {
      std::vector<double> est;
      double see_sum = 0.0;
      std::size_t see_count = 0, covered = 0;
      for (const auto& rec : records) {
        if (!rec.ok) continue;
        const EstimatorRun& run = rec.runs[ei];
        est.push_back(run.estimate[j]);
        if (!run.se.empty() && std::isfinite(run.se[j])) {
          see_sum += run.se[j];
          ++see_count;
          if (std::fabs(run.estimate[j] - design.beta0[j]) <= z * run.se[j]) ++covered;
        }
      }
      ReportRow row{opts.estimators[ei], j, kNaN, kNaN, kNaN, kNaN, est.size()};
      if (!est.empty()) {
        const double m = static_cast<double>(est.size());
        const double mean = std::accumulate(est.begin(), est.end(), 0.0) / m;
        row.bias = mean - design.beta0[j];
        if (est.size() > 1) {
          double ss = 0.0;
          for (double v : est) ss += (v - mean) * (v - mean);
          row.se = std::sqrt(ss / (m - 1.0));
        }
      }
      if (see_count > 0) {
        row.see = see_sum / static_cast<double>(see_count);
        row.cp95 = static_cast<double>(covered) / static_cast<double>(see_count);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

SimulationReport run_study(const SimDesign& design, const StudyOptions& opts) {
  design.validate();
  if (opts.replications == 0) throw InputError("replications must be positive");
  if (opts.estimators.empty()) throw InputError("no estimators selected");
  if (!(opts.level > 0.0 && opts.level < 1.0)) throw InputError("coverage level must lie in (0, 1)");

  std::vector<ReplicationRecord> records(opts.replications);
  const auto nr = static_cast<std::ptrdiff_t>(opts.replications);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t r = 0; r < nr; ++r) {
    const auto idx = static_cast<std::size_t>(r);
    try {
      records[idx] = run_replication(design, opts, idx);
    } catch (const std::exception& e) {
      records[idx].index = idx;
      records[idx].ok = false;
      records[idx].error = e.what();
    }
  }

  SimulationReport report;
  report.design = design;
  report.options = opts;
  for (const auto& rec : records)
    if (!rec.ok) ++report.failures;
  report.valid = static_cast<double>(report.failures) <=
                 0.02 * static_cast<double>(opts.replications);
  report.rows = summarize_study(design, opts, records);
  report.records = std::move(records);
  return report;
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw InputError("correlation needs two equal-length series");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace dtreg
