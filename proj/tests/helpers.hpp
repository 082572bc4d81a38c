#pragma once

#include <Eigen/Dense>

#include <functional>
#include <random>

namespace testutil {

inline std::mt19937_64 make_rng(unsigned long seed) {
  return std::mt19937_64(seed);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, int n, double lo,
                                     double hi) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = uniform(rng, lo, hi);
  return v;
}

// Central difference of f along coordinate i at x.
inline double central_diff(const std::function<double(const Eigen::VectorXd&)>& f,
                           const Eigen::VectorXd& x, int i, double h) {
  Eigen::VectorXd xp = x, xm = x;
  xp[i] += h;
  xm[i] -= h;
  return (f(xp) - f(xm)) / (2.0 * h);
}

}  // namespace testutil
