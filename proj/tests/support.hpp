#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "dtreg/rng.hpp"
#include "dtreg/sample.hpp"

namespace testing_support {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Random valid records: x ~ U(-1, 1)^p, y ~ N(0, 1), bounds at exponential
// distances from y, each side left open (infinite) one time in five.
inline std::vector<dtreg::Observation> random_records(std::size_t n, std::size_t p,
                                                      dtreg::Rng& rng,
                                                      double open_prob = 0.2) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::exponential_distribution<double> gap(1.0);
  std::bernoulli_distribution open(open_prob);
  std::vector<dtreg::Observation> out(n);
  for (auto& o : out) {
    o.x.resize(p);
    for (double& v : o.x) v = unif(rng);
    o.y = normal(rng);
    o.l = open(rng) ? -kInf : o.y - 0.05 - gap(rng);
    o.r = open(rng) ? kInf : o.y + 0.05 + gap(rng);
  }
  return out;
}

inline std::vector<double> random_beta(std::size_t p, dtreg::Rng& rng, double scale = 1.5) {
  std::uniform_real_distribution<double> unif(-scale, scale);
  std::vector<double> b(p);
  for (double& v : b) v = unif(rng);
  return b;
}

inline double rel_err(double a, double b) {
  const double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
  return std::fabs(a - b) / scale;
}

inline std::vector<dtreg::Observation> d2_records() {
  return {{1.0, {0.0}, 0.5, 1.5}, {2.0, {1.0}, 1.8, 2.4}};
}

}  // namespace testing_support
