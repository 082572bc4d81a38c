#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "arp/errors.hpp"
#include "arp/feasible_set.hpp"
#include "arp/tensor.hpp"

namespace arp {

// Objective / constraint evaluation tallies for one solver run.
struct EvalCounters {
  long f_values = 0;
  long f_derivative_sets = 0;
  long c_values = 0;
  long c_derivative_sets = 0;
};

class SmoothFunction {
 public:
  virtual ~SmoothFunction() = default;
  virtual int dim() const = 0;
  virtual double eval_value(const Eigen::VectorXd& x) const = 0;
  // Value plus derivative tensors of orders 1..degree at x.
  virtual TaylorData eval_taylor(const Eigen::VectorXd& x, int degree) const = 0;
};

inline double checked_value(const SmoothFunction& h, const Eigen::VectorXd& x) {
  const double v = h.eval_value(x);
  if (!std::isfinite(v)) throw EvaluationError("oracle returned non-finite value");
  return v;
}

inline TaylorData checked_taylor(const SmoothFunction& h,
                                 const Eigen::VectorXd& x, int degree) {
  TaylorData t = h.eval_taylor(x, degree);
  t.validate();
  if (!std::isfinite(t.value))
    throw EvaluationError("oracle returned non-finite value");
  for (const SymTensor& d : t.derivs)
    if (!d.all_finite())
      throw EvaluationError("oracle returned non-finite derivative");
  return t;
}

// Adapter that charges every evaluation to a counter set. Used to run the
// regularization loop on a bare objective.
class CountedFunction final : public SmoothFunction {
 public:
  CountedFunction(const SmoothFunction& fn, EvalCounters& counters)
      : fn_(fn), counters_(counters) {}

  int dim() const override { return fn_.dim(); }

  double eval_value(const Eigen::VectorXd& x) const override {
    ++counters_.f_values;
    return checked_value(fn_, x);
  }

  TaylorData eval_taylor(const Eigen::VectorXd& x, int degree) const override {
    ++counters_.f_derivative_sets;
    return checked_taylor(fn_, x, degree);
  }

 private:
  const SmoothFunction& fn_;
  EvalCounters& counters_;
};

// Equality-constrained problem over a convex feasible set.
struct Problem {
  std::string name;
  std::shared_ptr<const SmoothFunction> objective;
  std::vector<std::shared_ptr<const SmoothFunction>> equality_constraints;
  FeasibleSet feasible = FeasibleSet::whole_space(1);
  double f_low = 0.0;
  std::optional<double> f_up;
  // Derivative Lipschitz constants of the objective per model degree.
  std::array<std::optional<double>, 3> lipschitz{};
  Eigen::VectorXd default_start;

  int dim() const { return objective ? objective->dim() : 0; }
  int num_constraints() const {
    return static_cast<int>(equality_constraints.size());
  }
  std::optional<double> lipschitz_p(int p) const {
    return (p >= 1 && p <= 3) ? lipschitz[static_cast<std::size_t>(p - 1)]
                              : std::nullopt;
  }

  void validate() const {
    if (!objective) throw std::invalid_argument("Problem: objective missing");
    if (feasible.dim() != objective->dim())
      throw std::invalid_argument("Problem: feasible set dimension mismatch");
    for (const auto& c : equality_constraints)
      if (!c || c->dim() != objective->dim())
        throw std::invalid_argument("Problem: constraint dimension mismatch");
    if (default_start.size() != objective->dim())
      throw std::invalid_argument("Problem: start point dimension mismatch");
  }
};

struct WhichFunction {
  bool is_objective = true;
  int constraint_index = -1;
  static WhichFunction objective() { return {true, -1}; }
  static WhichFunction constraint(int i) { return {false, i}; }
};

inline double eval_value_counted(const Problem& P, WhichFunction which,
                                 const Eigen::VectorXd& x,
                                 EvalCounters& counters) {
  if (which.is_objective) {
    ++counters.f_values;
    return checked_value(*P.objective, x);
  }
  ++counters.c_values;
  return checked_value(
      *P.equality_constraints.at(static_cast<std::size_t>(which.constraint_index)),
      x);
}

inline TaylorData eval_taylor_counted(const Problem& P, WhichFunction which,
                                      const Eigen::VectorXd& x, int degree,
                                      EvalCounters& counters) {
  if (which.is_objective) {
    ++counters.f_derivative_sets;
    return checked_taylor(*P.objective, x, degree);
  }
  ++counters.c_derivative_sets;
  return checked_taylor(
      *P.equality_constraints.at(static_cast<std::size_t>(which.constraint_index)),
      x, degree);
}

struct DerivativeCheckReport {
  int degree = 0;
  // max |fd - exact| / max(1, max |exact|) per derivative order 1..degree.
  std::array<double, 3> max_rel_error{};

  bool passed(double tol) const {
    for (int q = 0; q < degree; ++q)
      if (!(max_rel_error[static_cast<std::size_t>(q)] <= tol)) return false;
    return true;
  }
};

// Central-difference validation of hand-coded tensors: the order-q tensor is
// compared against differences of order-(q-1) data along each coordinate.
// Report-only; evaluations here are never charged to solver counters.
inline DerivativeCheckReport derivative_check(const SmoothFunction& h,
                                              const Eigen::VectorXd& x, int p,
                                              double step = 1e-5) {
  if (p < 1 || p > 3) throw std::invalid_argument("derivative_check: p in [1,3]");
  const int n = h.dim();
  TaylorData exact = checked_taylor(h, x, p);

  DerivativeCheckReport report;
  report.degree = p;
  std::array<double, 3> max_abs_err{};
  std::array<double, 3> scale{};
  for (int q = 1; q <= p; ++q)
    scale[static_cast<std::size_t>(q - 1)] =
        std::max(1.0, exact.derivs[static_cast<std::size_t>(q - 1)].max_abs());

  for (int i = 0; i < n; ++i) {
    const double hi = step * std::max(1.0, std::abs(x[i]));
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += hi;
    xm[i] -= hi;

    const double fd1 = (h.eval_value(xp) - h.eval_value(xm)) / (2.0 * hi);
    max_abs_err[0] = std::max(
        max_abs_err[0], std::abs(fd1 - exact.derivs[0].coeff({i})));

    if (p >= 2) {
      TaylorData tp = h.eval_taylor(xp, p - 1);
      TaylorData tm = h.eval_taylor(xm, p - 1);
      for (int q = 2; q <= p; ++q) {
        const SymTensor& dp = tp.derivs[static_cast<std::size_t>(q - 2)];
        const SymTensor& dm = tm.derivs[static_cast<std::size_t>(q - 2)];
        std::size_t flat = 0;
        detail::for_each_canonical(q - 1, n, [&](std::span<const int> J) {
          const double fd = (dp.entry_at(flat) - dm.entry_at(flat)) / (2.0 * hi);
          std::array<int, 3> full{};
          for (std::size_t a = 0; a < J.size(); ++a) full[a] = J[a];
          full[static_cast<std::size_t>(q - 1)] = i;
          const double ex = exact.derivs[static_cast<std::size_t>(q - 1)].coeff(
              std::span<const int>(full.data(), static_cast<std::size_t>(q)));
          max_abs_err[static_cast<std::size_t>(q - 1)] =
              std::max(max_abs_err[static_cast<std::size_t>(q - 1)],
                       std::abs(fd - ex));
          ++flat;
        });
      }
    }
  }
  for (int q = 1; q <= p; ++q)
    report.max_rel_error[static_cast<std::size_t>(q - 1)] =
        max_abs_err[static_cast<std::size_t>(q - 1)] /
        scale[static_cast<std::size_t>(q - 1)];
  return report;
}

}  // namespace arp
