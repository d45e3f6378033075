#include "dtreg/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dtreg::kernels {

namespace {

constexpr std::size_t kParallelMinRows = 64;
constexpr std::size_t kLanes = 4;

inline double fmin2(double a, double b) { return b < a ? b : a; }
inline double fmax2(double a, double b) { return b > a ? b : a; }

// Upper-triangle row i of the clipped sum. Fixed 4-lane accumulation keeps the
// summation order independent of data alignment.
template <bool Perturbed, bool Weighted>
double clipped_row(std::size_t i, std::size_t n, const double* e, const double* lg,
                   const double* ug, const double* pw, const double* psi) {
  const double ei = e[i];
  // Window for (i, j): lo = max(l_j - y_j, y_i - r_i), hi = min(r_j - y_j, y_i - l_i)
  const double lo_i = -ug[i];
  const double hi_i = -lg[i];
  const double wi = Perturbed ? pw[i] : 0.0;
  const double si = Weighted ? psi[i] : 0.0;

  auto term = [&](std::size_t j) {
    const double lo = fmax2(lg[j], lo_i);
    const double hi = fmin2(ug[j], hi_i);
    double v = std::fabs(fmin2(fmax2(ei - e[j], lo), hi));
    if constexpr (Perturbed) v *= wi + pw[j];
    if constexpr (Weighted) v *= fmin2(si, psi[j]);
    return v;
  };

  double lane[kLanes] = {0.0, 0.0, 0.0, 0.0};
  std::size_t j = i + 1;
  for (; j + kLanes <= n; j += kLanes) {
    lane[0] += term(j);
    lane[1] += term(j + 1);
    lane[2] += term(j + 2);
    lane[3] += term(j + 3);
  }
  for (std::size_t t = 0; j < n; ++j, ++t) lane[t] += term(j);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

template <bool Perturbed, bool Weighted>
double clipped_sum(const TruncatedSample& s, const double* e, const double* pw,
                   const double* psi, bool parallel) {
  const std::size_t n = s.size();
  const double* lg = s.lower_gap().data();
  const double* ug = s.upper_gap().data();
  std::vector<double> rows(n, 0.0);
  const auto ni = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 16) if (parallel)
  for (std::ptrdiff_t i = 0; i < ni; ++i)
    rows[i] = clipped_row<Perturbed, Weighted>(static_cast<std::size_t>(i), n, e, lg, ug, pw, psi);
  double total = 0.0;
  for (double r : rows) total += r;
  return 2.0 * total;
}

template <bool Perturbed>
double comparable_row(std::size_t i, std::size_t n, const double* e, const double* a,
                      const double* lg, const double* ug, const double* pw) {
  const double ei = e[i];
  const double ai = a[i];
  const double lo_i = -ug[i];
  const double hi_i = -lg[i];
  const double wi = Perturbed ? pw[i] : 0.0;
  auto term = [&](std::size_t j) {
    const double lo = fmax2(lg[j], lo_i);
    const double hi = fmin2(ug[j], hi_i);
    const double da = ai - a[j];
    double v = (lo < da && da < hi) ? std::fabs(ei - e[j]) : 0.0;
    if constexpr (Perturbed) v *= wi + pw[j];
    return v;
  };
  double lane[kLanes] = {0.0, 0.0, 0.0, 0.0};
  std::size_t j = i + 1;
  for (; j + kLanes <= n; j += kLanes) {
    lane[0] += term(j);
    lane[1] += term(j + 1);
    lane[2] += term(j + 2);
    lane[3] += term(j + 3);
  }
  for (std::size_t t = 0; j < n; ++j, ++t) lane[t] += term(j);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

template <bool Perturbed>
double comparable_sum(const TruncatedSample& s, const double* e, const double* a,
                      const double* pw, bool parallel) {
  const std::size_t n = s.size();
  const double* lg = s.lower_gap().data();
  const double* ug = s.upper_gap().data();
  std::vector<double> rows(n, 0.0);
  const auto ni = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 16) if (parallel)
  for (std::ptrdiff_t i = 0; i < ni; ++i)
    rows[i] = comparable_row<Perturbed>(static_cast<std::size_t>(i), n, e, a, lg, ug, pw);
  double total = 0.0;
  for (double r : rows) total += r;
  return 2.0 * total;
}

}  // namespace

bool runs_parallel(Exec exec, std::size_t n) {
  return exec == Exec::Parallel && n >= kParallelMinRows && !omp_in_parallel() &&
         omp_get_max_threads() > 1;
}

double clipped_loss(const TruncatedSample& sample, std::span<const double> e,
                    const PairWeights& weights, Exec exec) {
  const bool par = runs_parallel(exec, sample.size());
  const double* pw = weights.perturbation.data();
  const double* psi = weights.psi.data();
  const bool perturbed = !weights.perturbation.empty();
  const bool weighted = !weights.psi.empty();
  if (perturbed && weighted) return clipped_sum<true, true>(sample, e.data(), pw, psi, par);
  if (perturbed) return clipped_sum<true, false>(sample, e.data(), pw, psi, par);
  if (weighted) return clipped_sum<false, true>(sample, e.data(), pw, psi, par);
  return clipped_sum<false, false>(sample, e.data(), pw, psi, par);
}

double comparable_l1(const TruncatedSample& sample, std::span<const double> e,
                     std::span<const double> anchor_e,
                     std::span<const double> perturbation, Exec exec) {
  const bool par = runs_parallel(exec, sample.size());
  if (!perturbation.empty())
    return comparable_sum<true>(sample, e.data(), anchor_e.data(), perturbation.data(), par);
  return comparable_sum<false>(sample, e.data(), anchor_e.data(), nullptr, par);
}

double untruncated_l1(std::span<const double> e, std::span<const double> perturbation) {
  const std::size_t n = e.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return e[a] < e[b]; });

  if (perturbation.empty()) {
    // sum_ij |e_i - e_j| = 2 sum_k (2k - n + 1) e_(k)
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      total += (2.0 * static_cast<double>(k) - static_cast<double>(n) + 1.0) * e[order[k]];
    return 2.0 * total;
  }

  // sum_ij (W_i + W_j)|e_i - e_j| = 2 sum_i W_i S_i with S_i = sum_j |e_i - e_j|
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) prefix[k + 1] = prefix[k] + e[order[k]];
  const double all = prefix[n];
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double v = e[order[k]];
    const double below = v * static_cast<double>(k) - prefix[k];
    const double above = (all - prefix[k + 1]) - v * static_cast<double>(n - k - 1);
    total += perturbation[order[k]] * (below + above);
  }
  return 2.0 * total;
}

std::vector<double> score(const TruncatedSample& sample, std::span<const double> e,
                          const PairWeights& weights, Exec exec) {
  const std::size_t n = sample.size();
  const std::size_t p = sample.dim();
  const double* lg = sample.lower_gap().data();
  const double* ug = sample.upper_gap().data();
  const double* x = sample.covariates().data();
  const auto pw = weights.perturbation;
  const auto psi = weights.psi;

  std::vector<double> rows(n * p, 0.0);
  const auto ni = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 16) if (runs_parallel(exec, n))
  for (std::ptrdiff_t ii = 0; ii < ni; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* acc = rows.data() + i * p;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double lo = fmax2(lg[j], -ug[i]);
      const double hi = fmin2(ug[j], -lg[i]);
      const double d = e[i] - e[j];
      if (!(lo < d && d < hi) || d == 0.0) continue;
      double w = d > 0.0 ? 1.0 : -1.0;
      if (!pw.empty()) w *= pw[i] + pw[j];
      if (!psi.empty()) w *= fmin2(psi[i], psi[j]);
      for (std::size_t k = 0; k < p; ++k) acc[k] += w * (x[i * p + k] - x[j * p + k]);
    }
  }
  std::vector<double> total(p, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < p; ++k) total[k] += rows[i * p + k];
  for (double& v : total) v *= 2.0;
  return total;
}

double pair_mass(std::size_t n, const PairWeights& weights) {
  const auto pw = weights.perturbation;
  const auto psi = weights.psi;
  if (psi.empty()) {
    if (pw.empty()) return static_cast<double>(n) * static_cast<double>(n);
    double sum = 0.0;
    for (double w : pw) sum += w;
    return 2.0 * static_cast<double>(n) * sum;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double v = fmin2(psi[i], psi[j]);
      if (!pw.empty()) v *= pw[i] + pw[j];
      row += v;
    }
    total += row;
  }
  return total;
}

std::vector<double> at_risk_reciprocal(std::span<const double> e) {
  const std::size_t n = e.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return e[a] < e[b]; });
  std::vector<double> psi(n);
  std::size_t k = 0;
  while (k < n) {
    std::size_t end = k;
    while (end < n && e[order[end]] == e[order[k]]) ++end;
    // Tied residuals share the count of everything at or above them.
    const double inv = 1.0 / static_cast<double>(n - k);
    for (std::size_t m = k; m < end; ++m) psi[order[m]] = inv;
    k = end;
  }
  return psi;
}

}  // namespace dtreg::kernels
