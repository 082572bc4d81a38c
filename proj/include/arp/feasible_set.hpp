#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace arp {

struct ChiSolution {
  double value = 0.0;   // min <g, d> over the admissible set, always <= 0
  Eigen::VectorXd d;    // a minimizer
};

// Closed convex feasible set: the whole space or a box with optionally
// infinite bounds. Both are stored as bound vectors so projection,
// membership and the linearized criticality subproblem share one path.
class FeasibleSet {
 public:
  static FeasibleSet whole_space(int n) {
    if (n <= 0) throw std::invalid_argument("FeasibleSet: dim must be positive");
    const double inf = std::numeric_limits<double>::infinity();
    FeasibleSet f;
    f.whole_ = true;
    f.lo_ = Eigen::VectorXd::Constant(n, -inf);
    f.up_ = Eigen::VectorXd::Constant(n, inf);
    return f;
  }

  static FeasibleSet box(Eigen::VectorXd lower, Eigen::VectorXd upper) {
    if (lower.size() == 0 || lower.size() != upper.size())
      throw std::invalid_argument("FeasibleSet: bound sizes must match");
    for (int i = 0; i < lower.size(); ++i) {
      if (std::isnan(lower[i]) || std::isnan(upper[i]))
        throw std::invalid_argument("FeasibleSet: bounds must not be NaN");
      if (lower[i] > upper[i])
        throw std::invalid_argument("FeasibleSet: lower bound exceeds upper");
    }
    FeasibleSet f;
    f.whole_ = false;
    f.lo_ = std::move(lower);
    f.up_ = std::move(upper);
    return f;
  }

  int dim() const { return static_cast<int>(lo_.size()); }
  bool is_whole_space() const { return whole_; }
  const Eigen::VectorXd& lower() const { return lo_; }
  const Eigen::VectorXd& upper() const { return up_; }

  Eigen::VectorXd project(const Eigen::VectorXd& x) const {
    check_dim(x);
    Eigen::VectorXd z(x.size());
    for (int i = 0; i < x.size(); ++i)
      z[i] = std::min(std::max(x[i], lo_[i]), up_[i]);
    return z;
  }

  bool contains(const Eigen::VectorXd& x, double tol = 1e-10) const {
    check_dim(x);
    for (int i = 0; i < x.size(); ++i)
      if (!(x[i] >= lo_[i] - tol && x[i] <= up_[i] + tol)) return false;
    return true;
  }

  // Minimizes <g, d> over {d : x + d feasible, |d|_inf <= 1}. Separable:
  // each coordinate moves to the end of its interval that g points away from.
  ChiSolution chi_linear_min(const Eigen::VectorXd& x,
                             const Eigen::VectorXd& g) const {
    check_dim(x);
    if (g.size() != lo_.size())
      throw std::invalid_argument("chi_linear_min: gradient dimension mismatch");
    if (!contains(x, 1e-9))
      throw std::domain_error("chi_linear_min: point is not feasible");
    ChiSolution sol;
    sol.d = Eigen::VectorXd::Zero(x.size());
    for (int i = 0; i < x.size(); ++i) {
      const double lo = std::max(lo_[i] - x[i], -1.0);
      const double hi = std::min(up_[i] - x[i], 1.0);
      if (g[i] > 0.0)
        sol.d[i] = lo;
      else if (g[i] < 0.0)
        sol.d[i] = hi;
      sol.value += g[i] * sol.d[i];
    }
    return sol;
  }

 private:
  void check_dim(const Eigen::VectorXd& x) const {
    if (x.size() != lo_.size())
      throw std::invalid_argument("FeasibleSet: dimension mismatch");
  }

  bool whole_ = true;
  Eigen::VectorXd lo_, up_;
};

}  // namespace arp
