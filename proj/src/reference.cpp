#include "dtreg/reference.hpp"

#include <algorithm>
#include <cmath>

namespace dtreg::reference {

namespace {

double pair_weight(const ResidualFrame* anchor_frame, std::size_t i, std::size_t j) {
  if (anchor_frame == nullptr) return 1.0;
  return logrank_weight(*anchor_frame, std::min(anchor_frame->e[i], anchor_frame->e[j]));
}

double multiplier(const PerturbationWeights* w, std::size_t i, std::size_t j) {
  if (w == nullptr) return 1.0;
  return w->values()[i] + w->values()[j];
}

}  // namespace

double loss(const TruncatedSample& sample, std::span<const double> beta) {
  double total = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i)
    for (std::size_t j = 0; j < sample.size(); ++j)
      total += clipped_pair_term(sample[i], sample[j], beta);
  return total;
}

double weighted_loss(const TruncatedSample& sample, std::span<const double> beta,
                     std::span<const double> anchor, WeightScheme scheme,
                     const PerturbationWeights* perturbation) {
  ResidualFrame frame;
  const ResidualFrame* anchor_frame = nullptr;
  if (scheme == WeightScheme::LogRank) {
    frame = residuals(sample, anchor);
    anchor_frame = &frame;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i)
    for (std::size_t j = 0; j < sample.size(); ++j)
      total += multiplier(perturbation, i, j) * pair_weight(anchor_frame, i, j) *
               clipped_pair_term(sample[i], sample[j], beta);
  return total;
}

double iterative_loss(const TruncatedSample& sample, std::span<const double> beta,
                      std::span<const double> anchor,
                      const PerturbationWeights* perturbation) {
  const ResidualFrame frame = residuals(sample, beta);
  double total = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i)
    for (std::size_t j = 0; j < sample.size(); ++j)
      if (comparable(sample[i], sample[j], anchor))
        total += multiplier(perturbation, i, j) * std::fabs(frame.e[i] - frame.e[j]);
  return total;
}

std::vector<double> score(const TruncatedSample& sample, std::span<const double> beta,
                          WeightScheme scheme, std::span<const double> anchor) {
  const ResidualFrame frame = residuals(sample, beta);
  ResidualFrame aframe;
  const ResidualFrame* anchor_frame = nullptr;
  if (scheme == WeightScheme::LogRank) {
    aframe = residuals(sample, anchor);
    anchor_frame = &aframe;
  }
  std::vector<double> u(sample.dim(), 0.0);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    for (std::size_t j = 0; j < sample.size(); ++j) {
      if (!comparable(sample[i], sample[j], beta)) continue;
      const double d = frame.e[i] - frame.e[j];
      const double sgn = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
      const double w = pair_weight(anchor_frame, i, j);
      for (std::size_t k = 0; k < sample.dim(); ++k)
        u[k] += w * (sample[i].x[k] - sample[j].x[k]) * sgn;
    }
  }
  return u;
}

}  // namespace dtreg::reference
