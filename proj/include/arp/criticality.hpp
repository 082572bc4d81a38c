#pragma once

#include <Eigen/Dense>

#include <cmath>

#include "arp/feasible_set.hpp"

namespace arp {

// First-order criticality of a gradient g at a feasible x: the magnitude of
// the best linear decrease over feasible directions in the unit inf-ball.
inline double chi(const Eigen::VectorXd& g, const Eigen::VectorXd& x,
                  const FeasibleSet& F) {
  const double v = F.chi_linear_min(x, g).value;
  return v == 0.0 ? 0.0 : -v;
}

// Projected-gradient criticality |P_F(x - g) - x|_2. Diagnostic companion to
// chi; both vanish exactly at first-order critical points.
inline double pi(const Eigen::VectorXd& g, const Eigen::VectorXd& x,
                 const FeasibleSet& F) {
  return (F.project(x - g) - x).norm();
}

// Norm-equivalence factor |v|_2 <= kappa_n(n) |v|_inf.
inline double kappa_n(int n) { return std::sqrt(static_cast<double>(n)); }

}  // namespace arp
