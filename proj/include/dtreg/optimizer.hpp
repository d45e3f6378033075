#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "dtreg/loss.hpp"
#include "dtreg/sample.hpp"

namespace dtreg {

struct SimplexOptions {
  double x_tol = 1e-6;  // max vertex distance (inf-norm) from the best vertex
  double f_tol = 1e-6;  // max objective spread across vertices
  // Evaluation budget; 0 means 400 * p.
  int max_evals = 0;
  // Initial edge along coordinate j is initial_step * max(1, |start_j|).
  double initial_step = 0.1;

  void validate(std::size_t p) const;
  int eval_budget(std::size_t p) const;
};

struct SimplexResult {
  std::vector<double> argmin;
  double value = 0.0;
  int evals = 0;
  bool converged = false;  // false when the budget ran out first
};

using Objective = std::function<double(std::span<const double>)>;

// Nelder-Mead with the standard coefficients (reflect 1, expand 2, contract
// 1/2, shrink 1/2). Vertex ordering is a stable sort, so ties resolve by
// insertion order and runs are reproducible. Throws OptimizationError on a
// non-finite objective value.
SimplexResult nelder_mead(const Objective& objective, std::vector<double> start,
                          const SimplexOptions& opts);

enum class Strategy { DirectSimplex, IterativeL1 };

const char* to_string(Strategy s);
Strategy parse_strategy(const std::string& name);

struct FitOptions {
  WeightScheme scheme = WeightScheme::Wilcoxon;
  int logrank_iterations = 3;
  // Stop rule on successive iterates: sum of absolute coordinate changes.
  double convergence_tol = 0.01;
  Strategy strategy = Strategy::DirectSimplex;
  SimplexOptions simplex;
  // Iteration cap for IterativeL1, and for LogRank when iterating to
  // convergence instead of a fixed count.
  int max_iterations = 50;
  bool logrank_until_converged = false;
};

struct FitResult {
  std::vector<double> beta_hat;
  WeightScheme scheme = WeightScheme::Wilcoxon;
  // Successive estimates; beta_hat is the last one.
  std::vector<std::vector<double>> iterates;
  double final_loss = 0.0;
  bool converged = false;
  int evals = 0;
  // How many of the trailing iterates are log-rank steps.
  std::size_t logrank_steps = 0;
};

// Thrown for samples whose covariate differences do not span R^p.
void require_identifiable(const TruncatedSample& sample);

// Minimizer of the untruncated pairwise L1 loss, ignoring the bounds.
FitResult naive_fit(const TruncatedSample& sample, const SimplexOptions& opts = {});

FitResult fit(const TruncatedSample& sample, const FitOptions& opts = {});

// Continues `from` (a Wilcoxon fit, or a log-rank fit after some steps) with
// log-rank steps anchored at the latest iterate: opts.logrank_iterations more
// of them, or until the change drops below convergence_tol when
// opts.logrank_until_converged is set (at most max_iterations in total).
FitResult logrank_iterate(const TruncatedSample& sample, FitResult from,
                          const FitOptions& opts);

// Minimizes objective / objective.mass() from start. For clipped objectives a
// local-minimum certificate is checked and one restart from a shifted start
// is made if it fails; the lower of the two answers is kept.
SimplexResult minimize(const PairObjective& objective, std::span<const double> start,
                       const SimplexOptions& opts);

// Coordinate probes at +-delta around beta: true when none improves.
bool is_local_minimum(const Objective& objective, std::span<const double> beta,
                      double delta);

}  // namespace dtreg
