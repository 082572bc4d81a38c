#pragma once

#include <Eigen/Dense>

#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "arp/oracle.hpp"

namespace arp {

// Sum of integer powers of affine forms: sum_j coef_j (a_j . x + b_j)^m_j.
// Covers every registry function except Rosenbrock; derivatives are exact.
class AffinePowerSum final : public SmoothFunction {
 public:
  struct Term {
    double coef;
    Eigen::VectorXd a;
    double b;
    int power;
  };

  AffinePowerSum(int dim, std::vector<Term> terms)
      : dim_(dim), terms_(std::move(terms)) {
    for (const Term& t : terms_) {
      if (t.power < 0)
        throw std::invalid_argument("AffinePowerSum: power must be >= 0");
      if (t.a.size() != dim_)
        throw std::invalid_argument("AffinePowerSum: term dimension mismatch");
    }
  }

  int dim() const override { return dim_; }

  double eval_value(const Eigen::VectorXd& x) const override {
    double v = 0.0;
    for (const Term& t : terms_) v += t.coef * ipow(t.a.dot(x) + t.b, t.power);
    return v;
  }

  TaylorData eval_taylor(const Eigen::VectorXd& x, int degree) const override {
    TaylorData out;
    out.value = eval_value(x);
    for (int q = 1; q <= degree; ++q) {
      SymTensor d(q, dim_);
      for (const Term& t : terms_) {
        if (t.power < q) continue;
        const double u = t.a.dot(x) + t.b;
        d.add_scaled(
            sym_outer_power(t.a, q,
                            t.coef * falling(t.power, q) * ipow(u, t.power - q)),
            1.0);
      }
      out.derivs.push_back(std::move(d));
    }
    return out;
  }

 private:
  static double ipow(double u, int k) {
    double r = 1.0;
    for (; k > 0; --k) r *= u;
    return r;
  }
  static double falling(int m, int q) {
    double r = 1.0;
    for (int i = 0; i < q; ++i) r *= m - i;
    return r;
  }

  int dim_;
  std::vector<Term> terms_;
};

// 100 (x2 - x1^2)^2 + (1 - x1)^2 with hand-coded tensors to order 3.
class RosenbrockFunction final : public SmoothFunction {
 public:
  int dim() const override { return 2; }

  double eval_value(const Eigen::VectorXd& x) const override {
    const double u = x[1] - x[0] * x[0];
    const double w = 1.0 - x[0];
    return 100.0 * u * u + w * w;
  }

  TaylorData eval_taylor(const Eigen::VectorXd& x, int degree) const override {
    const double u = x[1] - x[0] * x[0];
    TaylorData out;
    out.value = eval_value(x);

    Eigen::VectorXd g(2);
    g << -400.0 * x[0] * u - 2.0 * (1.0 - x[0]), 200.0 * u;
    out.derivs.push_back(SymTensor::from_vector(g));

    if (degree >= 2) {
      Eigen::MatrixXd h(2, 2);
      h(0, 0) = -400.0 * x[1] + 1200.0 * x[0] * x[0] + 2.0;
      h(0, 1) = h(1, 0) = -400.0 * x[0];
      h(1, 1) = 200.0;
      out.derivs.push_back(SymTensor::from_matrix(h));
    }
    if (degree >= 3) {
      SymTensor d3(3, 2);
      d3.set_coeff({0, 0, 0}, 2400.0 * x[0]);
      d3.set_coeff({0, 0, 1}, -400.0);
      out.derivs.push_back(std::move(d3));
    }
    return out;
  }
};

namespace detail {

inline Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<int>(v.size()));
  int i = 0;
  for (double e : v) x[i++] = e;
  return x;
}

inline std::shared_ptr<const SmoothFunction> affine_sum(
    int dim, std::vector<AffinePowerSum::Term> terms) {
  return std::make_shared<AffinePowerSum>(dim, std::move(terms));
}

inline std::vector<Problem> build_registry() {
  std::vector<Problem> reg;

  {
    // f = (1/4) sum x_i^4 over [-1, 2]^2.
    Problem p;
    p.name = "quartic-box";
    p.objective = affine_sum(
        2, {{0.25, vec({1, 0}), 0.0, 4}, {0.25, vec({0, 1}), 0.0, 4}});
    p.feasible = FeasibleSet::box(vec({-1, -1}), vec({2, 2}));
    p.f_low = 0.0;
    p.f_up = 8.0;
    p.lipschitz = {12.0, 12.0, 3.0};
    p.default_start = vec({1.9, -0.7});
    reg.push_back(std::move(p));
  }
  {
    Problem p;
    p.name = "rosenbrock";
    p.objective = std::make_shared<RosenbrockFunction>();
    p.feasible = FeasibleSet::box(vec({-2, -2}), vec({2, 2}));
    p.f_low = 0.0;
    p.f_up = 3609.0;
    p.lipschitz = {5800.0, 6000.0, 1200.0};
    p.default_start = vec({-1.2, 1.0});
    reg.push_back(std::move(p));
  }
  {
    // f = x over [0, 1]; the minimizer sits at the lower bound.
    Problem p;
    p.name = "linear-box";
    p.objective = affine_sum(1, {{1.0, vec({1}), 0.0, 1}});
    p.feasible = FeasibleSet::box(vec({0}), vec({1}));
    p.f_low = 0.0;
    p.f_up = 1.0;
    p.lipschitz = {0.0, 0.0, 0.0};
    p.default_start = vec({1.0});
    reg.push_back(std::move(p));
  }
  {
    // min x1 + x2 subject to x1^2 + x2^2 = 1.
    Problem p;
    p.name = "circle";
    p.objective = affine_sum(2, {{1.0, vec({1, 1}), 0.0, 1}});
    p.equality_constraints.push_back(affine_sum(
        2, {{1.0, vec({1, 0}), 0.0, 2}, {1.0, vec({0, 1}), 0.0, 2},
            {-1.0, vec({0, 0}), 0.0, 0}}));
    p.feasible = FeasibleSet::whole_space(2);
    p.f_low = -2.0;
    p.f_up = 2.0;
    p.lipschitz = {0.0, 0.0, 0.0};
    p.default_start = vec({2.0, 0.0});
    reg.push_back(std::move(p));
  }
  {
    // Powell-type objective with two equality constraints over [-3, 3]^4;
    // the global solution (10/7, -1/7, -4/7, -4/7) has f = 0.
    Problem p;
    p.name = "powell-equality";
    p.objective = affine_sum(
        4, {{1.0, vec({1, 10, 0, 0}), 0.0, 2}, {5.0, vec({0, 0, 1, -1}), 0.0, 2}});
    p.equality_constraints.push_back(affine_sum(
        4, {{1.0, vec({0, 1, -2, 0}), 0.0, 2}, {-1.0, vec({0, 0, 0, 0}), 0.0, 0}}));
    p.equality_constraints.push_back(affine_sum(
        4, {{1.0, vec({1, 0, 0, -1}), 0.0, 3}, {-8.0, vec({0, 0, 0, 0}), 0.0, 0}}));
    p.feasible =
        FeasibleSet::box(vec({-3, -3, -3, -3}), vec({3, 3, 3, 3}));
    p.f_low = 0.0;
    p.f_up = 1269.0;
    p.lipschitz = {202.0, 0.0, 0.0};
    p.default_start = vec({-1.2, 1.0, 1.2, 1.2});
    reg.push_back(std::move(p));
  }
  {
    // c = x^2 + 1 never vanishes; phase 1 must stop infeasible-critical.
    Problem p;
    p.name = "infeasible";
    p.objective = affine_sum(1, {{1.0, vec({1}), 0.0, 1}});
    p.equality_constraints.push_back(affine_sum(
        1, {{1.0, vec({1}), 0.0, 2}, {1.0, vec({0}), 0.0, 0}}));
    p.feasible = FeasibleSet::whole_space(1);
    p.f_low = -1.0;
    p.f_up = 1.0;
    p.lipschitz = {0.0, 0.0, 0.0};
    p.default_start = vec({1.0});
    reg.push_back(std::move(p));
  }

  for (const Problem& p : reg) p.validate();
  return reg;
}

}  // namespace detail

inline const std::vector<Problem>& problem_registry() {
  static const std::vector<Problem> reg = detail::build_registry();
  return reg;
}

inline std::vector<std::string> problem_names() {
  std::vector<std::string> names;
  for (const Problem& p : problem_registry()) names.push_back(p.name);
  return names;
}

inline const Problem& find_problem(std::string_view name) {
  for (const Problem& p : problem_registry())
    if (p.name == name) return p;
  std::ostringstream msg;
  msg << "unknown problem '" << name << "'; available:";
  for (const Problem& p : problem_registry()) msg << ' ' << p.name;
  throw std::invalid_argument(msg.str());
}

}  // namespace arp
