#pragma once

// Serial reference implementations: a plain loop over all ordered pairs,
// built from the per-pair primitives with no symmetry or precomputation.
// Kept to cross-check and benchmark the OpenMP kernels; O(n^2) or worse.

#include <span>
#include <vector>

#include "dtreg/loss.hpp"

namespace dtreg::reference {

double loss(const TruncatedSample& sample, std::span<const double> beta);

double weighted_loss(const TruncatedSample& sample, std::span<const double> beta,
                     std::span<const double> anchor, WeightScheme scheme,
                     const PerturbationWeights* perturbation = nullptr);

double iterative_loss(const TruncatedSample& sample, std::span<const double> beta,
                      std::span<const double> anchor,
                      const PerturbationWeights* perturbation = nullptr);

std::vector<double> score(const TruncatedSample& sample, std::span<const double> beta,
                          WeightScheme scheme, std::span<const double> anchor);

}  // namespace dtreg::reference
