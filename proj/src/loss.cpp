#include "dtreg/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dtreg/error.hpp"

namespace dtreg {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw InputError("coefficient vector has length " + std::to_string(b.size()) +
                     ", covariate dimension is " + std::to_string(a.size()));
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

std::vector<double> residual_vector(const TruncatedSample& sample,
                                    std::span<const double> beta) {
  auto eta = linear_predictor(sample, beta);
  const auto y = sample.y();
  for (std::size_t i = 0; i < eta.size(); ++i) eta[i] = y[i] - eta[i];
  return eta;
}

std::span<const double> perturbation_span(const TruncatedSample& sample,
                                          const PerturbationWeights* w) {
  if (w == nullptr) return {};
  if (w->size() != sample.size())
    throw InputError("perturbation has " + std::to_string(w->size()) +
                     " weights for a sample of " + std::to_string(sample.size()));
  return w->values();
}

}  // namespace

const char* to_string(WeightScheme scheme) {
  return scheme == WeightScheme::Wilcoxon ? "wilcoxon" : "logrank";
}

WeightScheme parse_weight_scheme(const std::string& name) {
  if (name == "wilcoxon") return WeightScheme::Wilcoxon;
  if (name == "logrank" || name == "log-rank") return WeightScheme::LogRank;
  throw InputError("unknown weight scheme '" + name + "'");
}

PerturbationWeights::PerturbationWeights(std::vector<double> w) : w_(std::move(w)) {
  for (std::size_t i = 0; i < w_.size(); ++i)
    if (!(w_[i] >= 0.0) || !std::isfinite(w_[i]))
      throw InputError("perturbation weight " + std::to_string(i) + " is not a finite nonnegative number", i);
}

PairWindow pair_window(const Observation& obs_i, const Observation& obs_j) {
  const double lo = std::max(obs_j.l - obs_j.y, obs_i.y - obs_i.r);
  const double hi = std::min(obs_j.r - obs_j.y, obs_i.y - obs_i.l);
  if (!(lo < hi)) throw InputError("pair window is empty; observations violate l < y < r");
  return {lo, hi};
}

double clipped_pair_term(const Observation& obs_i, const Observation& obs_j,
                         std::span<const double> beta) {
  const PairWindow w = pair_window(obs_i, obs_j);
  const double d = (obs_i.y - dot(obs_i.x, beta)) - (obs_j.y - dot(obs_j.x, beta));
  return std::fabs(std::min(std::max(d, w.lo), w.hi));
}

double loss(const TruncatedSample& sample, std::span<const double> beta, Exec exec) {
  const auto e = residual_vector(sample, beta);
  return kernels::clipped_loss(sample, e, {}, exec);
}

bool comparable(const Observation& obs_i, const Observation& obs_j,
                std::span<const double> beta) {
  const double eta_i = dot(obs_i.x, beta);
  const double eta_j = dot(obs_j.x, beta);
  const double e_i = obs_i.y - eta_i;
  const double e_j = obs_j.y - eta_j;
  return obs_j.l - eta_j < e_i && e_i < obs_j.r - eta_j &&
         obs_i.l - eta_i < e_j && e_j < obs_i.r - eta_i;
}

bool comparable_by_window(const Observation& obs_i, const Observation& obs_j,
                          std::span<const double> beta) {
  const PairWindow w = pair_window(obs_i, obs_j);
  const double d = (obs_i.y - dot(obs_i.x, beta)) - (obs_j.y - dot(obs_j.x, beta));
  return w.lo < d && d < w.hi;
}

std::vector<double> score(const TruncatedSample& sample, std::span<const double> beta,
                          WeightScheme scheme, std::span<const double> anchor,
                          const PerturbationWeights* perturbation, Exec exec) {
  const auto e = residual_vector(sample, beta);
  std::vector<double> psi;
  if (scheme == WeightScheme::LogRank)
    psi = kernels::at_risk_reciprocal(residual_vector(sample, anchor));
  return kernels::score(sample, e, {perturbation_span(sample, perturbation), psi}, exec);
}

double logrank_weight(const ResidualFrame& frame, double t) {
  std::size_t at_risk = 0;
  for (double v : frame.e)
    if (v >= t) ++at_risk;
  if (at_risk == 0) throw InputError("log-rank weight undefined: no residual at or above t");
  return 1.0 / static_cast<double>(at_risk);
}

double weighted_loss(const TruncatedSample& sample, std::span<const double> beta,
                     std::span<const double> anchor, WeightScheme scheme,
                     const PerturbationWeights* perturbation, Exec exec) {
  return PairObjective::clipped(sample, scheme, anchor, perturbation, exec)(beta);
}

double iterative_loss(const TruncatedSample& sample, std::span<const double> beta,
                      std::span<const double> anchor,
                      const PerturbationWeights* perturbation, Exec exec) {
  return PairObjective::iterative(sample, anchor, perturbation, exec)(beta);
}

double untruncated_loss(const TruncatedSample& sample, std::span<const double> beta,
                        const PerturbationWeights* perturbation) {
  return PairObjective::untruncated(sample, perturbation)(beta);
}

PairObjective PairObjective::clipped(const TruncatedSample& sample, WeightScheme scheme,
                                     std::span<const double> anchor,
                                     const PerturbationWeights* perturbation, Exec exec) {
  PairObjective obj(sample, Kind::Clipped, exec);
  const auto pw = perturbation_span(sample, perturbation);
  obj.perturbation_.assign(pw.begin(), pw.end());
  if (scheme == WeightScheme::LogRank)
    obj.psi_ = kernels::at_risk_reciprocal(residual_vector(sample, anchor));
  obj.mass_ = kernels::pair_mass(sample.size(), obj.weights());
  return obj;
}

PairObjective PairObjective::iterative(const TruncatedSample& sample,
                                       std::span<const double> anchor,
                                       const PerturbationWeights* perturbation, Exec exec) {
  PairObjective obj(sample, Kind::Comparable, exec);
  const auto pw = perturbation_span(sample, perturbation);
  obj.perturbation_.assign(pw.begin(), pw.end());
  obj.anchor_e_ = residual_vector(sample, anchor);
  obj.mass_ = kernels::pair_mass(sample.size(), obj.weights());
  return obj;
}

PairObjective PairObjective::untruncated(const TruncatedSample& sample,
                                         const PerturbationWeights* perturbation) {
  PairObjective obj(sample, Kind::Untruncated, Exec::Serial);
  const auto pw = perturbation_span(sample, perturbation);
  obj.perturbation_.assign(pw.begin(), pw.end());
  obj.mass_ = kernels::pair_mass(sample.size(), obj.weights());
  return obj;
}

double PairObjective::operator()(std::span<const double> beta) const {
  const auto e = residual_vector(*sample_, beta);
  switch (kind_) {
    case Kind::Clipped:
      return kernels::clipped_loss(*sample_, e, weights(), exec_);
    case Kind::Comparable:
      return kernels::comparable_l1(*sample_, e, anchor_e_, perturbation_, exec_);
    case Kind::Untruncated:
      return kernels::untruncated_l1(e, perturbation_);
  }
  return 0.0;
}

}  // namespace dtreg
