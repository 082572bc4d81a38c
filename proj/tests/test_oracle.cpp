#include "arp/oracle.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "arp/registry.hpp"
#include "helpers.hpp"

using arp::AffinePowerSum;
using arp::EvalCounters;
using arp::Problem;
using arp::SmoothFunction;
using arp::TaylorData;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> v) { return arp::detail::vec(v); }

VectorXd random_feasible(std::mt19937_64& rng, const Problem& p) {
  const auto& F = p.feasible;
  VectorXd x(p.dim());
  for (int i = 0; i < p.dim(); ++i) {
    const double lo = std::isfinite(F.lower()[i]) ? F.lower()[i] : -2.0;
    const double hi = std::isfinite(F.upper()[i]) ? F.upper()[i] : 2.0;
    x[i] = testutil::uniform(rng, lo, hi);
  }
  return x;
}

// Wrapper that corrupts one Hessian entry by a known amount.
class CorruptedHessian final : public SmoothFunction {
 public:
  explicit CorruptedHessian(const SmoothFunction& base) : base_(base) {}
  int dim() const override { return base_.dim(); }
  double eval_value(const VectorXd& x) const override {
    return base_.eval_value(x);
  }
  TaylorData eval_taylor(const VectorXd& x, int degree) const override {
    TaylorData t = base_.eval_taylor(x, degree);
    if (degree >= 2) t.derivs[1].add_coeff({0, 0}, 0.1);
    return t;
  }

 private:
  const SmoothFunction& base_;
};

class NonFiniteFunction final : public SmoothFunction {
 public:
  int dim() const override { return 1; }
  double eval_value(const VectorXd&) const override {
    return std::numeric_limits<double>::infinity();
  }
  TaylorData eval_taylor(const VectorXd&, int) const override {
    TaylorData t;
    t.value = 0.0;
    t.derivs.push_back(arp::SymTensor::from_vector(
        VectorXd::Constant(1, std::numeric_limits<double>::quiet_NaN())));
    return t;
  }
};

}  // namespace

TEST_CASE("counted value evaluations") {
  AffinePowerSum half_sq(
      2, {{0.5, vec({1, 0}), 0.0, 2}, {0.5, vec({0, 1}), 0.0, 2}});
  Problem p;
  p.name = "tmp";
  p.objective = std::make_shared<AffinePowerSum>(half_sq);
  p.equality_constraints.push_back(
      arp::find_problem("circle").equality_constraints[0]);
  p.feasible = arp::FeasibleSet::whole_space(2);
  p.default_start = vec({0, 0});

  EvalCounters counters;
  REQUIRE(arp::eval_value_counted(p, arp::WhichFunction::objective(),
                                  vec({3, 4}), counters) == 12.5);
  REQUIRE(counters.f_values == 1);
  REQUIRE(arp::eval_value_counted(p, arp::WhichFunction::constraint(0),
                                  vec({1, 0}), counters) == 0.0);
  REQUIRE(counters.c_values == 1);
  arp::eval_value_counted(p, arp::WhichFunction::objective(), vec({3, 4}),
                          counters);
  REQUIRE(counters.f_values == 2);
  REQUIRE(counters.f_derivative_sets == 0);

  arp::eval_taylor_counted(p, arp::WhichFunction::objective(), vec({1, 1}), 2,
                           counters);
  REQUIRE(counters.f_derivative_sets == 1);
  REQUIRE(counters.f_values == 2);
  arp::eval_taylor_counted(p, arp::WhichFunction::constraint(0), vec({1, 1}),
                           2, counters);
  REQUIRE(counters.c_derivative_sets == 1);
}

TEST_CASE("counted function adapter charges the right counter") {
  EvalCounters counters;
  AffinePowerSum cube(1, {{1.0, vec({1}), 0.0, 3}});
  arp::CountedFunction counted(cube, counters);
  REQUIRE(counted.eval_value(vec({2})) == 8.0);
  counted.eval_taylor(vec({2}), 3);
  REQUIRE(counters.f_values == 1);
  REQUIRE(counters.f_derivative_sets == 1);
}

TEST_CASE("non-finite oracle output is rejected") {
  NonFiniteFunction bad;
  EvalCounters counters;
  arp::CountedFunction counted(bad, counters);
  REQUIRE_THROWS_AS(counted.eval_value(vec({0})), arp::EvaluationError);
  REQUIRE_THROWS_AS(counted.eval_taylor(vec({0}), 1), arp::EvaluationError);
}

TEST_CASE("derivative check on a linear function") {
  AffinePowerSum lin(2, {{1.0, vec({2, -3}), 0.5, 1}});
  auto report = arp::derivative_check(lin, vec({0.3, -0.7}), 3);
  REQUIRE(report.max_rel_error[0] <= 1e-9);
  REQUIRE(report.max_rel_error[1] == 0.0);
  REQUIRE(report.max_rel_error[2] == 0.0);
  REQUIRE(report.passed(1e-6));
}

TEST_CASE("derivative check on x^3 at x = 2") {
  AffinePowerSum cube(1, {{1.0, vec({1}), 0.0, 3}});
  auto report = arp::derivative_check(cube, vec({2}), 3);
  REQUIRE(report.passed(1e-6));
}

TEST_CASE("derivative check flags a corrupted Hessian") {
  AffinePowerSum cube(1, {{1.0, vec({1}), 0.0, 3}});
  CorruptedHessian corrupted(cube);
  auto report = arp::derivative_check(corrupted, vec({2}), 3);
  REQUIRE(report.max_rel_error[0] <= 1e-6);
  REQUIRE(report.max_rel_error[1] > 1e-3);
  REQUIRE_FALSE(report.passed(1e-6));
}

TEST_CASE("registry derivatives agree with finite differences") {
  auto rng = testutil::make_rng(31337);
  for (const Problem& p : arp::problem_registry()) {
    INFO("problem " << p.name);
    for (int trial = 0; trial < 5; ++trial) {
      VectorXd x = random_feasible(rng, p);
      REQUIRE(arp::derivative_check(*p.objective, x, 3).passed(1e-6));
      for (const auto& c : p.equality_constraints)
        REQUIRE(arp::derivative_check(*c, x, 3).passed(1e-6));
    }
  }
}

TEST_CASE("registry Lipschitz constants dominate sampled tensor variation") {
  auto rng = testutil::make_rng(98765);
  static constexpr std::array<double, 4> fact{1.0, 1.0, 2.0, 6.0};
  for (const char* name : {"quartic-box", "rosenbrock", "linear-box"}) {
    const Problem& p = arp::find_problem(name);
    INFO("problem " << p.name);
    for (int trial = 0; trial < 200; ++trial) {
      VectorXd x = random_feasible(rng, p);
      VectorXd y = random_feasible(rng, p);
      VectorXd u = testutil::random_vector(rng, p.dim(), -1, 1);
      if (u.norm() == 0.0) continue;
      u /= u.norm();
      TaylorData tx = p.objective->eval_taylor(x, 3);
      TaylorData ty = p.objective->eval_taylor(y, 3);
      for (int q = 1; q <= 3; ++q) {
        arp::SymTensor diff = tx.derivs[static_cast<std::size_t>(q - 1)];
        diff.add_scaled(ty.derivs[static_cast<std::size_t>(q - 1)], -1.0);
        const double applied = std::abs(arp::contract(diff, u, q).scalar());
        const double bound = fact[static_cast<std::size_t>(q - 1)] *
                                 p.lipschitz_p(q).value() * (x - y).norm() +
                             1e-9;
        REQUIRE(applied <= bound);
      }
    }
  }
}

TEST_CASE("registry values at reference points") {
  const Problem& rosen = arp::find_problem("rosenbrock");
  REQUIRE(rosen.objective->eval_value(vec({1, 1})) == 0.0);

  const Problem& quartic = arp::find_problem("quartic-box");
  REQUIRE(quartic.objective->eval_value(vec({2, 2})) == 8.0);

  const Problem& circle = arp::find_problem("circle");
  REQUIRE(circle.equality_constraints[0]->eval_value(vec({1, 0})) == 0.0);

  const Problem& powell = arp::find_problem("powell-equality");
  VectorXd star = vec({10.0 / 7, -1.0 / 7, -4.0 / 7, -4.0 / 7});
  REQUIRE(std::abs(powell.objective->eval_value(star)) < 1e-13);
  REQUIRE(std::abs(powell.equality_constraints[0]->eval_value(star)) < 1e-13);
  REQUIRE(std::abs(powell.equality_constraints[1]->eval_value(star)) < 1e-13);

  const Problem& infeasible = arp::find_problem("infeasible");
  REQUIRE(infeasible.equality_constraints[0]->eval_value(vec({0})) == 1.0);

  REQUIRE(arp::problem_names().size() == 6);
  REQUIRE_THROWS_AS(arp::find_problem("nope"), std::invalid_argument);
}

TEST_CASE("problem validation catches shape mismatches") {
  Problem p = arp::find_problem("circle");
  p.default_start = vec({1});
  REQUIRE_THROWS_AS(p.validate(), std::invalid_argument);
}
