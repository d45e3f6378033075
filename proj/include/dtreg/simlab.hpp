#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dtreg/inference.hpp"
#include "dtreg/optimizer.hpp"
#include "dtreg/rng.hpp"
#include "dtreg/sample.hpp"

namespace dtreg {

// ExtremeMinValue is the standard minimum Gumbel law, F(x) = 1 - exp(-exp(x)).
enum class ErrorLaw { Normal, Logistic, ExtremeMinValue };

// CovariateIndependent: L ~ U[lower, 1], R ~ U[1, upper].
// CovariateDependent:   L ~ U[lower, m], R ~ U[m, upper], m = x1 + x2 / 2.
// None:                 L = -inf, R = +inf.
enum class TruncationScheme { CovariateIndependent, CovariateDependent, None };

const char* to_string(ErrorLaw law);
const char* to_string(TruncationScheme scheme);
ErrorLaw parse_error_law(const std::string& name);
TruncationScheme parse_truncation_scheme(const std::string& name);

double draw_error(ErrorLaw law, Rng& rng);

struct SimDesign {
  std::size_t n = 200;
  std::vector<double> beta0 = {0.0, 1.0};
  ErrorLaw error = ErrorLaw::Normal;
  TruncationScheme truncation = TruncationScheme::CovariateIndependent;
  // (c1, c2) or (c3, c4) depending on the scheme.
  double lower_const = 0.0;
  double upper_const = 2.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct GenerationStats {
  std::size_t attempts = 0;
  std::size_t left_truncated = 0;
  std::size_t right_truncated = 0;
};

// Draws (x1 ~ Bernoulli(1/2), x2 ~ U[0, 2], error, bounds) until n records
// fall strictly inside their bounds.
TruncatedSample generate_dataset(const SimDesign& design, Rng& rng,
                                 GenerationStats* stats = nullptr);

struct TruncationRates {
  double left = 0.0;
  double right = 0.0;
};

// Monte Carlo truncation proportions on `attempts` draws.
TruncationRates truncation_rates(const SimDesign& design, std::size_t attempts, Rng& rng);

struct Calibration {
  double lower_const = 0.0;
  double upper_const = 0.0;
  TruncationRates achieved;
  bool reached = false;  // both sides within tolerance of their targets
};

struct CalibrationOptions {
  double target_left = 0.15;
  double target_right = 0.15;
  std::size_t attempts = 200000;
  double tolerance = 0.01;
  std::uint64_t seed = 12345;
};

// Bisection on each side's constant under common random numbers, which makes
// the Monte Carlo proportion exactly monotone in the constant.
Calibration calibrate_truncation(const SimDesign& design, const CalibrationOptions& opts = {});

enum class Estimator { Naive, Wilcoxon, LogRank };

const char* to_string(Estimator e);
Estimator parse_estimator(const std::string& name);

struct StudyOptions {
  std::size_t replications = 200;
  std::size_t B = 200;  // 0 skips resampling (no SEE / coverage)
  FitOptions fit;       // scheme is overridden per estimator
  std::vector<Estimator> estimators = {Estimator::Naive, Estimator::Wilcoxon,
                                       Estimator::LogRank};
  PerturbationLaw law;
  double level = 0.95;
  // Also iterate log-rank to convergence, for comparison with the fixed count.
  bool compare_convergence = false;
};

struct EstimatorRun {
  std::vector<double> estimate;
  std::vector<double> se;  // empty when not resampled
  bool resample_valid = true;
};

struct ReplicationRecord {
  std::size_t index = 0;
  bool ok = false;
  std::string error;
  std::vector<EstimatorRun> runs;  // parallel to StudyOptions::estimators
  std::vector<double> logrank_converged;
  std::size_t logrank_converged_steps = 0;
};

struct ReportRow {
  Estimator estimator;
  std::size_t parameter;  // zero-based
  double bias;
  double se;    // empirical SD of the estimates
  double see;   // mean resampled se
  double cp95;  // coverage of Wald intervals at StudyOptions::level
  std::size_t replications;
};

struct SimulationReport {
  SimDesign design;
  StudyOptions options;
  std::vector<ReportRow> rows;
  std::vector<ReplicationRecord> records;
  std::size_t failures = 0;
  bool valid = true;  // false when more than 2% of replications failed

  const ReportRow& row(Estimator e, std::size_t parameter) const;
};

SimulationReport run_study(const SimDesign& design, const StudyOptions& opts);

// Aggregates replication records into report rows.
std::vector<ReportRow> summarize_study(const SimDesign& design, const StudyOptions& opts,
                                       const std::vector<ReplicationRecord>& records);

double pearson_correlation(std::span<const double> a, std::span<const double> b);

}  // namespace dtreg
