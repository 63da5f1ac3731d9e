#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "fedsim/rng.hpp"

namespace fedsim {

// Fisher-Yates over 0..m-1, uniform over all m! orders.
inline std::vector<int> sample_permutation(int m, Rng& rng) {
  if (m < 1) throw std::invalid_argument("permutation: m must be positive");
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  for (int i = m - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[i], order[j]);
  }
  return order;
}

// First s entries of a fresh permutation = uniform without-replacement draw.
inline std::vector<int> sample_without_replacement(int n, int s, Rng& rng) {
  if (s < 1 || s > n) throw std::invalid_argument("swor: need 1 <= s <= n");
  auto order = sample_permutation(n, rng);
  order.resize(s);
  return order;
}

struct SworStats {
  Eigen::VectorXd mean_err;  // empirical mean of sample means, minus population mean
  double var;                // empirical E || sample mean - population mean ||^2
};

// Monte-Carlo estimate of the bias and variance of the without-replacement
// sample mean. The matching closed form is swor_mean_variance below.
inline SworStats swor_mean_stats(const std::vector<Eigen::VectorXd>& pop, int s,
                                 int trials, Rng& rng) {
  const int n = static_cast<int>(pop.size());
  if (n == 0) throw std::invalid_argument("swor stats: empty population");
  if (s < 1 || s > n) throw std::invalid_argument("swor stats: need 1 <= s <= n");
  Eigen::VectorXd popmean = Eigen::VectorXd::Zero(pop[0].size());
  for (const auto& v : pop) popmean += v;
  popmean /= n;

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(popmean.size());
  double var = 0.0;
  for (int t = 0; t < trials; ++t) {
    auto pick = sample_without_replacement(n, s, rng);
    std::sort(pick.begin(), pick.end());  // index-order sums: s = n is exact
    Eigen::VectorXd sm = Eigen::VectorXd::Zero(popmean.size());
    for (int i : pick) sm += pop[i];
    sm /= s;
    acc += sm - popmean;
    var += (sm - popmean).squaredNorm();
  }
  return {acc / trials, var / trials};
}

// Population spread zeta^2 = mean squared distance from the population mean.
inline double population_spread(const std::vector<Eigen::VectorXd>& pop) {
  Eigen::VectorXd popmean = Eigen::VectorXd::Zero(pop.at(0).size());
  for (const auto& v : pop) popmean += v;
  popmean /= static_cast<double>(pop.size());
  double z = 0.0;
  for (const auto& v : pop) z += (v - popmean).squaredNorm();
  return z / static_cast<double>(pop.size());
}

// Without replacement: E || mean of s draws - population mean ||^2
//   = (n-s) / (s (n-1)) * zeta^2        (0 when s = n)
inline double swor_mean_variance(int n, int s, double zeta_sq) {
  if (n == 1) return 0.0;
  return static_cast<double>(n - s) / (static_cast<double>(s) * (n - 1)) * zeta_sq;
}

// With replacement, the same quantity is zeta^2 / s.
inline double swr_mean_variance(int s, double zeta_sq) {
  return zeta_sq / static_cast<double>(s);
}

}  // namespace fedsim
