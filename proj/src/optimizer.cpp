#include "dtreg/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "dtreg/error.hpp"

namespace dtreg {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

std::string format_point(std::span<const double> x) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t k = 0; k < x.size(); ++k) os << (k ? ", " : "") << x[k];
  os << ')';
  return os.str();
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d += std::fabs(a[k] - b[k]);
  return d;
}

// Centered cross-product matrix of the covariates (p x p, row-major) and the
// centered covariate-response cross products.
void centered_moments(const TruncatedSample& s, std::vector<double>& gram,
                      std::vector<double>& xy) {
  const std::size_t n = s.size();
  const std::size_t p = s.dim();
  std::vector<double> mean(p, 0.0);
  double ybar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ybar += s.y()[i];
    for (std::size_t k = 0; k < p; ++k) mean[k] += s.x(i)[k];
  }
  ybar /= static_cast<double>(n);
  for (double& m : mean) m /= static_cast<double>(n);
  gram.assign(p * p, 0.0);
  xy.assign(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = s.x(i);
    for (std::size_t a = 0; a < p; ++a) {
      const double da = xi[a] - mean[a];
      xy[a] += da * (s.y()[i] - ybar);
      for (std::size_t b = 0; b < p; ++b) gram[a * p + b] += da * (xi[b] - mean[b]);
    }
  }
}

// In-place Cholesky; false when a pivot is negligible relative to the trace.
bool cholesky(std::vector<double>& a, std::size_t p) {
  double trace = 0.0;
  for (std::size_t k = 0; k < p; ++k) trace += a[k * p + k];
  const double floor = std::max(trace, 1e-300) * 1e-12;
  for (std::size_t j = 0; j < p; ++j) {
    double d = a[j * p + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * p + k] * a[j * p + k];
    if (!(d > floor)) return false;
    const double root = std::sqrt(d);
    a[j * p + j] = root;
    for (std::size_t i = j + 1; i < p; ++i) {
      double v = a[i * p + j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i * p + k] * a[j * p + k];
      a[i * p + j] = v / root;
    }
  }
  return true;
}

std::vector<double> cholesky_solve(const std::vector<double>& l, std::size_t p,
                                   std::vector<double> b) {
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t k = 0; k < i; ++k) b[i] -= l[i * p + k] * b[k];
    b[i] /= l[i * p + i];
  }
  for (std::size_t ii = p; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < p; ++k) b[ii] -= l[k * p + ii] * b[k];
    b[ii] /= l[ii * p + ii];
  }
  return b;
}

// Least-squares slopes with free intercept; a starting point only.
std::vector<double> least_squares_start(const TruncatedSample& s) {
  std::vector<double> gram, xy;
  centered_moments(s, gram, xy);
  if (!cholesky(gram, s.dim()))
    throw InputError("covariates are degenerate; coefficients are not identifiable");
  return cholesky_solve(gram, s.dim(), xy);
}

}  // namespace

void SimplexOptions::validate(std::size_t p) const {
  if (!(x_tol > 0.0) || !(f_tol > 0.0) || !(initial_step > 0.0))
    throw InputError("simplex tolerances and initial step must be positive");
  if (max_evals < 0 || (max_evals > 0 && static_cast<std::size_t>(max_evals) < p + 1))
    throw InputError("simplex evaluation budget must be at least p + 1");
}

int SimplexOptions::eval_budget(std::size_t p) const {
  return max_evals > 0 ? max_evals : static_cast<int>(400 * p);
}

SimplexResult nelder_mead(const Objective& objective, std::vector<double> start,
                          const SimplexOptions& opts) {
  const std::size_t p = start.size();
  if (p == 0) throw InputError("cannot minimize over an empty parameter vector");
  opts.validate(p);
  const int budget = opts.eval_budget(p);

  int evals = 0;
  auto eval = [&](const std::vector<double>& x) {
    const double v = objective(x);
    ++evals;
    if (!std::isfinite(v))
      throw OptimizationError("objective is not finite at " + format_point(x));
    return v;
  };

  std::vector<std::vector<double>> v(p + 1, start);
  for (std::size_t j = 0; j < p; ++j)
    v[j + 1][j] += opts.initial_step * std::max(1.0, std::fabs(start[j]));
  std::vector<double> fv(p + 1);
  for (std::size_t j = 0; j <= p; ++j) fv[j] = eval(v[j]);

  std::vector<std::size_t> idx(p + 1);
  std::vector<double> centroid(p), xr(p), xe(p), xc(p);
  bool converged = false;

  for (;;) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    {
      std::vector<std::vector<double>> vs(p + 1);
      std::vector<double> fs(p + 1);
      for (std::size_t j = 0; j <= p; ++j) {
        vs[j] = std::move(v[idx[j]]);
        fs[j] = fv[idx[j]];
      }
      v.swap(vs);
      fv.swap(fs);
    }

    double fspread = 0.0;
    double xspread = 0.0;
    double xscale = 0.0;
    for (std::size_t k = 0; k < p; ++k) xscale = std::max(xscale, std::fabs(v[0][k]));
    for (std::size_t j = 1; j <= p; ++j) {
      fspread = std::max(fspread, std::fabs(fv[j] - fv[0]));
      for (std::size_t k = 0; k < p; ++k)
        xspread = std::max(xspread, std::fabs(v[j][k] - v[0][k]));
    }
    if (fspread <= std::max(opts.f_tol, 10.0 * kEps * std::fabs(fv[0])) &&
        xspread <= std::max(opts.x_tol, 10.0 * kEps * xscale)) {
      converged = true;
      break;
    }
    if (evals >= budget) break;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t k = 0; k < p; ++k) centroid[k] += v[j][k];
    for (double& c : centroid) c /= static_cast<double>(p);

    const auto& worst = v[p];
    for (std::size_t k = 0; k < p; ++k) xr[k] = 2.0 * centroid[k] - worst[k];
    const double fr = eval(xr);

    bool shrink = false;
    if (fr < fv[0]) {
      for (std::size_t k = 0; k < p; ++k) xe[k] = 3.0 * centroid[k] - 2.0 * worst[k];
      const double fe = eval(xe);
      if (fe < fr) {
        v[p] = xe;
        fv[p] = fe;
      } else {
        v[p] = xr;
        fv[p] = fr;
      }
    } else if (fr < fv[p - 1]) {
      v[p] = xr;
      fv[p] = fr;
    } else if (fr < fv[p]) {
      for (std::size_t k = 0; k < p; ++k) xc[k] = 1.5 * centroid[k] - 0.5 * worst[k];
      const double fc = eval(xc);
      if (fc <= fr) {
        v[p] = xc;
        fv[p] = fc;
      } else {
        shrink = true;
      }
    } else {
      for (std::size_t k = 0; k < p; ++k) xc[k] = 0.5 * centroid[k] + 0.5 * worst[k];
      const double fcc = eval(xc);
      if (fcc < fv[p]) {
        v[p] = xc;
        fv[p] = fcc;
      } else {
        shrink = true;
      }
    }
    if (shrink) {
      for (std::size_t j = 1; j <= p; ++j) {
        for (std::size_t k = 0; k < p; ++k) v[j][k] = v[0][k] + 0.5 * (v[j][k] - v[0][k]);
        fv[j] = eval(v[j]);
      }
    }
  }

  return {v[0], fv[0], evals, converged};
}

const char* to_string(Strategy s) {
  return s == Strategy::DirectSimplex ? "direct" : "iterative";
}

Strategy parse_strategy(const std::string& name) {
  if (name == "direct") return Strategy::DirectSimplex;
  if (name == "iterative") return Strategy::IterativeL1;
  throw InputError("unknown strategy '" + name + "'");
}

bool is_local_minimum(const Objective& objective, std::span<const double> beta,
                      double delta) {
  const double f0 = objective(beta);
  std::vector<double> probe(beta.begin(), beta.end());
  for (std::size_t k = 0; k < beta.size(); ++k) {
    for (double step : {delta, -delta}) {
      probe[k] = beta[k] + step;
      if (objective(probe) < f0) return false;
    }
    probe[k] = beta[k];
  }
  return true;
}

SimplexResult minimize(const PairObjective& objective, std::span<const double> start,
                       const SimplexOptions& opts) {
  const double scale = objective.mass() > 0.0 ? objective.mass() : 1.0;
  const Objective f = [&](std::span<const double> b) { return objective(b) / scale; };
  const std::size_t p = start.size();
  const double delta = 10.0 * opts.x_tol;
  const bool convex = objective.kind() != PairObjective::Kind::Clipped;

  SimplexResult best = nelder_mead(f, {start.begin(), start.end()}, opts);
  int evals = best.evals;
  // Convex surfaces: restarting from the answer can only help. Clipped
  // surfaces: one restart from a shifted start.
  const int max_restarts = convex ? 4 : 1;
  for (int restart = 0; restart < max_restarts; ++restart) {
    evals += static_cast<int>(2 * p + 1);
    if (is_local_minimum(f, best.argmin, delta)) break;
    std::vector<double> from(start.begin(), start.end());
    if (convex) {
      from = best.argmin;
    } else {
      for (std::size_t k = 0; k < p; ++k) from[k] += (k % 2 == 0) ? 0.5 : -0.5;
    }
    SimplexResult again = nelder_mead(f, std::move(from), opts);
    evals += again.evals;
    if (again.value < best.value) {
      best = std::move(again);
    } else if (convex) {
      break;
    }
  }
  best.evals = evals;
  best.value = objective(best.argmin);
  return best;
}

void require_identifiable(const TruncatedSample& sample) {
  std::vector<double> gram, xy;
  centered_moments(sample, gram, xy);
  if (!cholesky(gram, sample.dim()))
    throw InputError("covariates are degenerate; coefficients are not identifiable");
}

FitResult naive_fit(const TruncatedSample& sample, const SimplexOptions& opts) {
  if (sample.size() < 2) throw InputError("fitting needs at least two observations");
  opts.validate(sample.dim());
  const std::vector<double> start = least_squares_start(sample);
  const auto objective = PairObjective::untruncated(sample);
  SimplexResult r = minimize(objective, start, opts);
  FitResult out;
  out.beta_hat = r.argmin;
  out.scheme = WeightScheme::Wilcoxon;
  out.iterates = {r.argmin};
  out.final_loss = r.value;
  out.converged = r.converged;
  out.evals = r.evals;
  return out;
}

namespace {

FitResult wilcoxon_fit(const TruncatedSample& sample, const FitOptions& opts) {
  FitResult naive = naive_fit(sample, opts.simplex);
  FitResult out;
  out.scheme = WeightScheme::Wilcoxon;
  out.iterates = {naive.beta_hat};
  out.evals = naive.evals;

  if (opts.strategy == Strategy::DirectSimplex) {
    const auto objective = PairObjective::clipped(sample, WeightScheme::Wilcoxon, naive.beta_hat);
    SimplexResult r = minimize(objective, naive.beta_hat, opts.simplex);
    out.evals += r.evals;
    out.iterates.push_back(r.argmin);
    out.beta_hat = r.argmin;
    out.final_loss = r.value;
    out.converged = r.converged;
    return out;
  }

  std::vector<double> current = naive.beta_hat;
  for (int k = 1; k <= opts.max_iterations; ++k) {
    const auto objective = PairObjective::iterative(sample, current);
    SimplexResult r;
    try {
      r = minimize(objective, current, opts.simplex);
    } catch (const OptimizationError& e) {
      throw OptimizationError("iteration " + std::to_string(k) + ": " + e.what());
    }
    out.evals += r.evals;
    const double change = l1_distance(r.argmin, current);
    current = r.argmin;
    out.iterates.push_back(current);
    out.final_loss = r.value;
    if (change < opts.convergence_tol) {
      out.converged = true;
      break;
    }
  }
  out.beta_hat = current;
  return out;
}

}  // namespace

FitResult fit(const TruncatedSample& sample, const FitOptions& opts) {
  if (sample.size() < 2) throw InputError("fitting needs at least two observations");
  if (opts.logrank_iterations < 0 || opts.max_iterations < 1 || !(opts.convergence_tol > 0.0))
    throw InputError("invalid iteration settings");
  opts.simplex.validate(sample.dim());

  FitResult out = wilcoxon_fit(sample, opts);
  if (opts.scheme == WeightScheme::Wilcoxon) return out;
  return logrank_iterate(sample, std::move(out), opts);
}

FitResult logrank_iterate(const TruncatedSample& sample, FitResult from,
                          const FitOptions& opts) {
  if (from.iterates.empty()) throw InputError("fit result carries no iterates");
  FitResult out = std::move(from);
  out.scheme = WeightScheme::LogRank;
  int budget = opts.logrank_iterations;
  if (opts.logrank_until_converged)
    budget = opts.max_iterations - static_cast<int>(out.logrank_steps);
  std::vector<double> current = out.beta_hat;
  for (int k = 1; k <= budget; ++k) {
    const auto objective = PairObjective::clipped(sample, WeightScheme::LogRank, current);
    SimplexResult r;
    try {
      r = minimize(objective, current, opts.simplex);
    } catch (const OptimizationError& e) {
      throw OptimizationError("log-rank iteration " + std::to_string(out.logrank_steps + 1) +
                              ": " + e.what());
    }
    out.evals += r.evals;
    const double change = l1_distance(r.argmin, current);
    current = r.argmin;
    out.iterates.push_back(current);
    ++out.logrank_steps;
    out.final_loss = r.value;
    out.converged = change < opts.convergence_tol;
    if (opts.logrank_until_converged && out.converged) break;
  }
  out.beta_hat = current;
  return out;
}

}  // namespace dtreg
