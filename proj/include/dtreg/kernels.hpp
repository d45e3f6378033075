#pragma once

// Pair-sum kernels behind the loss functions. Every kernel visits each
// unordered pair once (all summands are symmetric in i, j) and is
// row-partitioned across OpenMP threads. Row partials are reduced in index
// order, so the result is bit-identical for any thread count.

#include <cstddef>
#include <span>
#include <vector>

#include "dtreg/sample.hpp"

namespace dtreg {

enum class Exec { Serial, Parallel };

// Optional pair multipliers. perturbation: W_i, pair factor W_i + W_j.
// psi: per-observation reciprocal at-risk counts, pair factor
// min(psi_i, psi_j) = psi at e_i ^ e_j. An empty span means factor 1.
struct PairWeights {
  std::span<const double> perturbation;
  std::span<const double> psi;
};

namespace kernels {

// sum_ij m_ij w_ij |clip(e_i - e_j; lo_ij, hi_ij)|
double clipped_loss(const TruncatedSample& sample, std::span<const double> e,
                    const PairWeights& weights, Exec exec);

// sum_ij m_ij 1{lo_ij < a_i - a_j < hi_ij} |e_i - e_j|, a = anchor residuals
double comparable_l1(const TruncatedSample& sample, std::span<const double> e,
                     std::span<const double> anchor_e,
                     std::span<const double> perturbation, Exec exec);

// sum_ij m_ij |e_i - e_j| by sorting.
double untruncated_l1(std::span<const double> e, std::span<const double> perturbation);

// sum_ij m_ij w_ij 1{lo_ij < e_i - e_j < hi_ij} (x_i - x_j) sgn(e_i - e_j)
std::vector<double> score(const TruncatedSample& sample, std::span<const double> e,
                          const PairWeights& weights, Exec exec);

// sum_ij m_ij w_ij, diagonal included.
double pair_mass(std::size_t n, const PairWeights& weights);

// psi_i = 1 / #{k : e_k >= e_i}
std::vector<double> at_risk_reciprocal(std::span<const double> e);

// Whether a kernel call with this policy and size would fork threads.
bool runs_parallel(Exec exec, std::size_t n);

}  // namespace kernels
}  // namespace dtreg
