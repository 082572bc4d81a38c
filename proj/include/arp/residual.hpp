#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "arp/criticality.hpp"
#include "arp/errors.hpp"
#include "arp/feasible_set.hpp"
#include "arp/oracle.hpp"
#include "arp/tensor.hpp"

namespace arp {

namespace detail {

// Symmetrized gradient-Hessian product: entry (a,b,c) is
// g_a H_bc + g_b H_ac + g_c H_ab.
inline SymTensor sym_grad_hess(const Eigen::VectorXd& g, const SymTensor& H) {
  const int n = static_cast<int>(g.size());
  SymTensor out(3, n);
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b)
      for (int c = b; c < n; ++c)
        out.set_coeff({a, b, c}, g(a) * H.coeff({b, c}) +
                                     g(b) * H.coeff({a, c}) +
                                     g(c) * H.coeff({a, b}));
  return out;
}

}  // namespace detail

// Merit function mu(x,t) = 1/2 |r(x,t)|^2 with r(x,t) = (c(x), f(x) - t),
// or r(x) = c(x) when the objective component is switched off. Exposed as a
// SmoothFunction so the regularization solver can run on it directly.
//
// Evaluations are charged to the supplied counters: the constraint block
// counts as one c-group evaluation per point, the objective component as one
// f-group evaluation. A per-group cache keyed by the evaluation point serves
// repeated queries (warm starts, residual readouts, target rescoring) without
// charging again. The target enters r affinely, so caches survive target
// changes.
class CompositeResidual final : public SmoothFunction {
 public:
  CompositeResidual(const Problem& problem, EvalCounters& counters,
                    bool include_objective)
      : problem_(&problem),
        counters_(&counters),
        include_objective_(include_objective) {
    if (problem.num_constraints() == 0 && !include_objective)
      throw std::invalid_argument(
          "CompositeResidual: no constraints and no objective component");
  }

  int dim() const override { return problem_->dim(); }
  int residual_size() const {
    return problem_->num_constraints() + (include_objective_ ? 1 : 0);
  }

  bool includes_objective() const { return include_objective_; }
  void set_include_objective(bool on) {
    if (!on && problem_->num_constraints() == 0)
      throw std::invalid_argument(
          "CompositeResidual: no constraints and no objective component");
    include_objective_ = on;
  }

  double target() const { return target_; }
  void set_target(double t) {
    if (!std::isfinite(t))
      throw std::invalid_argument("CompositeResidual: target must be finite");
    target_ = t;
  }

  double eval_value(const Eigen::VectorXd& x) const override {
    return 0.5 * residual(x).squaredNorm();
  }

  // r(x, current target); charges value evaluations only on cache misses.
  Eigen::VectorXd residual(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd& c = constraint_values(x);
    Eigen::VectorXd r(residual_size());
    r.head(c.size()) = c;
    if (include_objective_) r(r.size() - 1) = objective_value(x) - target_;
    return r;
  }

  double constraint_norm(const Eigen::VectorXd& x) const {
    return constraint_values(x).norm();
  }

  // f(x) through the cache; available regardless of the objective toggle.
  double objective_value(const Eigen::VectorXd& x) const {
    if (!(f_val_.valid && f_val_.x == x)) {
      if (f_tay_.valid && f_tay_.x == x) {
        f_val_ = {true, x, f_tay_.data[0].value};
      } else {
        f_val_ = {true, x, checked_value(*problem_->objective, x)};
        ++counters_->f_values;
      }
    }
    return f_val_.value;
  }

  TaylorData eval_taylor(const Eigen::VectorXd& x, int degree) const override {
    if (degree < 1 || degree > 3)
      throw std::invalid_argument("CompositeResidual: degree must be in [1,3]");
    const int m = problem_->num_constraints();
    const std::vector<TaylorData>* cdata = nullptr;
    if (m > 0) cdata = &constraint_taylor(x, degree);
    const TaylorData* fdata =
        include_objective_ ? &objective_taylor(x, degree) : nullptr;

    const int n = dim();
    TaylorData out;
    out.value = 0.0;
    out.derivs.assign(degree, SymTensor());
    for (int q = 1; q <= degree; ++q) out.derivs[q - 1] = SymTensor(q, n);

    auto accumulate = [&](const TaylorData& comp, double rv) {
      out.value += 0.5 * rv * rv;
      const SymTensor& g = comp.derivs[0];
      out.derivs[0].add_scaled(g, rv);
      if (degree >= 2) {
        out.derivs[1].add_scaled(sym_outer_power(g.to_vector(), 2, 1.0), 1.0);
        out.derivs[1].add_scaled(comp.derivs[1], rv);
      }
      if (degree >= 3) {
        out.derivs[2].add_scaled(
            detail::sym_grad_hess(g.to_vector(), comp.derivs[1]), 1.0);
        out.derivs[2].add_scaled(comp.derivs[2], rv);
      }
    };
    for (int i = 0; i < m; ++i) accumulate((*cdata)[i], (*cdata)[i].value);
    if (fdata) accumulate(*fdata, fdata->value - target_);
    return out;
  }

  // Criticality of grad mu(x, t_new) at the most recently differentiated
  // point, assembled from cached data only; charges nothing.
  double rescore_chi_at_new_target(double t_new, const FeasibleSet& F) const {
    if (!include_objective_)
      throw SolverError(
          "rescore_chi_at_new_target: objective component is switched off");
    if (!(f_tay_.valid))
      throw SolverError("rescore_chi_at_new_target: stale cache");
    const Eigen::VectorXd& x = f_tay_.x;
    const int m = problem_->num_constraints();
    if (m > 0 && !(c_tay_.valid && c_tay_.x == x))
      throw SolverError("rescore_chi_at_new_target: stale cache");

    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim());
    for (int i = 0; i < m; ++i)
      g += c_tay_.data[i].value * c_tay_.data[i].gradient();
    g += (f_tay_.data[0].value - t_new) * f_tay_.data[0].gradient();
    return chi(g, x, F);
  }

 private:
  struct ScalarCache {
    bool valid = false;
    Eigen::VectorXd x;
    double value = 0.0;
  };
  struct VectorCache {
    bool valid = false;
    Eigen::VectorXd x;
    Eigen::VectorXd values;
  };
  struct TaylorCache {
    bool valid = false;
    Eigen::VectorXd x;
    int degree = 0;
    std::vector<TaylorData> data;
  };

  const Eigen::VectorXd& constraint_values(const Eigen::VectorXd& x) const {
    const int m = problem_->num_constraints();
    if (!(c_val_.valid && c_val_.x == x)) {
      Eigen::VectorXd vals(m);
      if (m > 0 && c_tay_.valid && c_tay_.x == x) {
        for (int i = 0; i < m; ++i) vals(i) = c_tay_.data[i].value;
      } else if (m > 0) {
        for (int i = 0; i < m; ++i)
          vals(i) = checked_value(*problem_->equality_constraints[i], x);
        ++counters_->c_values;
      }
      c_val_ = {true, x, std::move(vals)};
    }
    return c_val_.values;
  }

  const std::vector<TaylorData>& constraint_taylor(const Eigen::VectorXd& x,
                                                   int degree) const {
    if (!(c_tay_.valid && c_tay_.x == x && c_tay_.degree >= degree)) {
      const int m = problem_->num_constraints();
      std::vector<TaylorData> data;
      data.reserve(m);
      for (int i = 0; i < m; ++i)
        data.push_back(
            checked_taylor(*problem_->equality_constraints[i], x, degree));
      ++counters_->c_derivative_sets;
      c_tay_ = {true, x, degree, std::move(data)};
    }
    return c_tay_.data;
  }

  const TaylorData& objective_taylor(const Eigen::VectorXd& x,
                                     int degree) const {
    if (!(f_tay_.valid && f_tay_.x == x && f_tay_.degree >= degree)) {
      std::vector<TaylorData> data;
      data.push_back(checked_taylor(*problem_->objective, x, degree));
      ++counters_->f_derivative_sets;
      f_tay_ = {true, x, degree, std::move(data)};
    }
    return f_tay_.data[0];
  }

  const Problem* problem_;
  EvalCounters* counters_;
  bool include_objective_;
  double target_ = 0.0;
  mutable VectorCache c_val_;
  mutable ScalarCache f_val_;
  mutable TaylorCache c_tay_;
  mutable TaylorCache f_tay_;
};

}  // namespace arp
