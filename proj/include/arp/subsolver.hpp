#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "arp/criticality.hpp"
#include "arp/errors.hpp"
#include "arp/feasible_set.hpp"
#include "arp/model.hpp"

namespace arp {

struct SubsolverControls {
  double theta = 100.0;
  long max_inner_iters = 100000;
  double armijo_c = 1e-4;
  double backtrack_factor = 0.5;
  // First projected-gradient step size; defaults to 1/sigma when unset.
  std::optional<double> initial_step;

  void validate() const {
    if (!(theta > 0.0))
      throw std::invalid_argument("SubsolverControls: theta must be positive");
    if (max_inner_iters <= 0)
      throw std::invalid_argument(
          "SubsolverControls: max_inner_iters must be positive");
    if (!(armijo_c > 0.0 && armijo_c < 1.0))
      throw std::invalid_argument("SubsolverControls: armijo_c must be in (0,1)");
    if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0))
      throw std::invalid_argument(
          "SubsolverControls: backtrack_factor must be in (0,1)");
    if (initial_step && !(*initial_step > 0.0))
      throw std::invalid_argument(
          "SubsolverControls: initial_step must be positive");
  }
};

// Independent re-verification of the three step conditions.
struct StepCheck {
  bool feasible = false;     // x_k + s in F
  bool decreased = false;    // m(s) < m(0)
  bool chi_ok = false;       // chi_m(x_k + s) <= theta |s|^p (+ slack)
  double chi_model = std::numeric_limits<double>::quiet_NaN();
  double bound = 0.0;        // theta |s|^p

  bool ok() const { return feasible && decreased && chi_ok; }
};

inline StepCheck check_step_conditions(const ModelState& M,
                                       const FeasibleSet& F, double theta,
                                       const Eigen::VectorXd& s) {
  StepCheck c;
  const Eigen::VectorXd z = M.x + s;
  c.feasible = F.contains(z, 1e-10);
  c.decreased = model_value(M, s) < M.taylor.value;
  c.bound = theta * std::pow(s.norm(), M.p);
  if (c.feasible) {
    c.chi_model = chi(model_gradient(M, s), z, F);
    c.chi_ok = c.chi_model <= c.bound + 1e-12;
  }
  return c;
}

struct SubsolverStats {
  long iterations = 0;
  std::vector<double> model_values;  // accepted inner values, non-increasing
};

// Projected gradient on the model from s = 0 with Armijo backtracking.
// Returns once the projected criticality of the model at x_k + s falls
// under theta |s|^p after at least one strict decrease.
inline Eigen::VectorXd solve_subproblem(const ModelState& M,
                                        const FeasibleSet& F,
                                        const SubsolverControls& C,
                                        SubsolverStats* stats = nullptr) {
  C.validate();
  const double m0 = M.taylor.value;
  Eigen::VectorXd z = M.x;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(M.x.size());
  double m_cur = m0;
  bool decreased = false;
  double alpha_start = C.initial_step.value_or(1.0 / M.sigma);
  if (stats) stats->model_values.push_back(m_cur);

  for (long it = 0; it < C.max_inner_iters; ++it) {
    if (stats) stats->iterations = it + 1;
    const Eigen::VectorXd g = model_gradient(M, s);
    if (decreased && chi(g, z, F) <= C.theta * std::pow(s.norm(), M.p))
      return s;

    double alpha = alpha_start;
    bool stepped = false;
    for (int bt = 0; bt < 200; ++bt) {
      const Eigen::VectorXd z_try = F.project(z - alpha * g);
      const double gd = g.dot(z - z_try);
      if (!(gd > 0.0)) break;  // projection fixed point: model-stationary
      const Eigen::VectorXd s_try = z_try - M.x;
      const double m_try = model_value(M, s_try);
      if (std::isfinite(m_try) && m_try <= m_cur - C.armijo_c * gd) {
        z = z_try;
        s = s_try;
        m_cur = m_try;
        stepped = true;
        decreased = true;
        if (stats) stats->model_values.push_back(m_cur);
        alpha_start = alpha / C.backtrack_factor;
        break;
      }
      alpha *= C.backtrack_factor;
    }

    if (!stepped) {
      if (!decreased)
        throw NoDescent("subproblem: no feasible decreasing step from x_k");
      if (chi(model_gradient(M, s), z, F) <=
          C.theta * std::pow(s.norm(), M.p))
        return s;
      throw InnerBudgetExceeded(
          "subproblem: stalled before the criticality condition held");
    }
  }
  throw InnerBudgetExceeded("subproblem: iteration budget exhausted");
}

}  // namespace arp
