#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <memory>

#include <arp/arpcc.hpp>
#include <arp/registry.hpp>

#include "helpers.hpp"

using namespace arp;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::shared_ptr<AffinePowerSum> half_square(int n) {
  // f(x) = 1/2 |x|^2 as a sum of 1/2 <e_i,x>^2 terms.
  std::vector<AffinePowerSum::Term> terms;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    a(i) = 1.0;
    terms.push_back({0.5, a, 0.0, 2});
  }
  return std::make_shared<AffinePowerSum>(n, terms);
}

struct RunSetup {
  std::shared_ptr<const SmoothFunction> fn;
  EvalCounters counters;
  CountedFunction counted;
  explicit RunSetup(std::shared_ptr<const SmoothFunction> h)
      : fn(std::move(h)), counted(*fn, counters) {}
};

}  // namespace

TEST_CASE("config validation rejects each ordering violation") {
  ArpccConfig good;
  REQUIRE_NOTHROW(good.validate());

  auto expect_bad = [](auto&& tweak) {
    ArpccConfig cfg;
    tweak(cfg);
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
  };
  expect_bad([](ArpccConfig& c) { c.p = 0; });
  expect_bad([](ArpccConfig& c) { c.p = 4; });
  expect_bad([](ArpccConfig& c) { c.sigma_min = 0.0; });
  expect_bad([](ArpccConfig& c) { c.sigma0 = 1e-9; });  // below sigma_min
  expect_bad([](ArpccConfig& c) { c.gamma1 = 1.0; });
  expect_bad([](ArpccConfig& c) { c.gamma1 = 0.0; });
  expect_bad([](ArpccConfig& c) { c.gamma2 = 1.0; });
  expect_bad([](ArpccConfig& c) { c.gamma3 = 1.5; });  // below gamma2
  expect_bad([](ArpccConfig& c) { c.eta1 = 0.0; });
  expect_bad([](ArpccConfig& c) { c.eta2 = 1.0; });
  expect_bad([](ArpccConfig& c) { c.eta1 = 0.95; });  // above eta2
  expect_bad([](ArpccConfig& c) { c.epsilon = 0.0; });
  expect_bad([](ArpccConfig& c) { c.epsilon = 1.5; });
  expect_bad([](ArpccConfig& c) { c.max_outer_iters = 0; });
}

TEST_CASE("sigma update branches") {
  ArpccConfig cfg;  // eta1=0.01 eta2=0.9 gamma1=0.5 gamma2=2 sigma_min=1e-8
  CHECK(sigma_update(2.0, 0.95, cfg) == 1.0);   // very successful: halve
  CHECK(sigma_update(2.0, 0.5, cfg) == 2.0);    // successful: hold
  CHECK(sigma_update(2.0, -1.0, cfg) == 4.0);   // unsuccessful: double
  CHECK(sigma_update(2.0, kNaN, cfg) == 4.0);   // skipped trial: double
  CHECK(sigma_update(1e-8, 0.99, cfg) == 1e-8); // floor at sigma_min
}

TEST_CASE("kappa_u frozen values") {
  CHECK(kappa_u(0.5, 2.0, 1.0, 1.0) == Catch::Approx(2.0).margin(1e-14));
  CHECK(kappa_u(0.5, 2.0, 1.0, 2.0) == Catch::Approx(3.0).margin(1e-14));
  // |log gamma1| term vanishes as gamma1 -> 1.
  CHECK(kappa_u(1.0, 2.0, 1.0, 4.0) == Catch::Approx(3.0).margin(1e-14));
}

TEST_CASE("kappa_s frozen values and eta1 scaling") {
  CHECK(kappa_s(1, 1.0, 1.0, 1.0, 0.2, 0.2, 0.1) ==
        Catch::Approx(2.0).margin(1e-14));
  // Bracket equal to one isolates the (p+1)/(eta1 sigma_min) prefactor.
  CHECK(kappa_s(2, 0.25, 2.0, 1.0, 0.1, 0.3, 0.1) ==
        Catch::Approx(3.0 / 0.5).margin(1e-12));
  CHECK(kappa_s(2, 0.125, 2.0, 1.0, 0.1, 0.3, 0.1) ==
        Catch::Approx(2.0 * kappa_s(2, 0.25, 2.0, 1.0, 0.1, 0.3, 0.1))
            .epsilon(1e-14));
}

TEST_CASE("quadratic reaches the critical point") {
  RunSetup run(half_square(1));
  ArpccConfig cfg;
  cfg.p = 2;
  cfg.epsilon = 1e-6;
  Eigen::VectorXd x0(1);
  x0 << 4.0;
  auto res = arpcc_minimize(run.counted, FeasibleSet::whole_space(1), cfg, x0,
                            run.counters);
  REQUIRE(res.status == ArpccStatus::CriticalityReached);
  CHECK(std::abs(res.x_eps(0)) <= 1e-6);  // chi = |x| here
  CHECK(res.chi_eps <= cfg.epsilon);
  CHECK(res.successful_iterations >= 1);
  CHECK(res.counters.f_values == run.counters.f_values);
}

TEST_CASE("already-critical start returns without iterating") {
  RunSetup run(half_square(2));
  ArpccConfig cfg;
  cfg.epsilon = 1e-6;
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(2);
  auto res = arpcc_minimize(run.counted, FeasibleSet::whole_space(2), cfg, x0,
                            run.counters);
  REQUIRE(res.status == ArpccStatus::CriticalityReached);
  CHECK(res.trace.empty());
  CHECK(res.total_iterations == 0);
  CHECK(res.chi_eps == 0.0);
  CHECK(run.counters.f_values == 1);
  CHECK(run.counters.f_derivative_sets == 1);
}

TEST_CASE("linear objective walks to the blocking bound") {
  // f(x) = x on [0,1]: the only critical point is x = 0.
  std::vector<AffinePowerSum::Term> terms{
      {1.0, Eigen::VectorXd::Ones(1), 0.0, 1}};
  RunSetup run(std::make_shared<AffinePowerSum>(1, terms));
  ArpccConfig cfg;
  cfg.p = 1;
  cfg.epsilon = 1e-8;
  Eigen::VectorXd lo(1), hi(1), x0(1);
  lo << 0.0;
  hi << 1.0;
  x0 << 1.0;
  auto res = arpcc_minimize(run.counted, FeasibleSet::box(lo, hi), cfg, x0,
                            run.counters);
  REQUIRE(res.status == ArpccStatus::CriticalityReached);
  CHECK(res.x_eps(0) == 0.0);
  CHECK(res.chi_eps == 0.0);
}

TEST_CASE("custom predicate replaces the criticality test") {
  RunSetup run(half_square(2));
  ArpccConfig cfg;
  cfg.epsilon = 1e-14;  // would never trigger within the budget
  cfg.max_outer_iters = 200;
  Eigen::VectorXd x0(2);
  x0 << 4.0, 3.0;
  int calls = 0;
  StopPredicate stop = [&](const StopContext& ctx) {
    ++calls;
    // For this objective the gradient equals the iterate.
    REQUIRE(ctx.gradient.isApprox(ctx.x, 1e-14));
    REQUIRE(ctx.chi == Catch::Approx(ctx.gradient.lpNorm<1>()).margin(1e-14));
    return ctx.value <= 1.0;
  };
  auto res = arpcc_minimize(run.counted, FeasibleSet::whole_space(2), cfg, x0,
                            run.counters, stop);
  REQUIRE(res.status == ArpccStatus::CustomPredicate);
  CHECK(res.value_eps <= 1.0);
  CHECK(calls == res.successful_iterations + 1);  // start plus each acceptance
}

TEST_CASE("budget exhaustion reports BudgetExceeded with a full trace") {
  auto problem = find_problem("rosenbrock");
  RunSetup run(problem.objective);
  ArpccConfig cfg;
  cfg.p = 2;
  cfg.epsilon = 1e-12;
  cfg.max_outer_iters = 2;
  auto res = arpcc_minimize(run.counted, problem.feasible, cfg,
                            problem.default_start, run.counters);
  REQUIRE(res.status == ArpccStatus::BudgetExceeded);
  CHECK(res.total_iterations == 2);
  CHECK(res.trace.size() == 2);
}

TEST_CASE("decrease guard skips the trial evaluation") {
  RunSetup run(half_square(1));
  ArpccConfig cfg;
  cfg.p = 2;
  cfg.epsilon = 1e-16;
  cfg.max_outer_iters = 5;
  Eigen::VectorXd x0(1);
  x0 << 1e-12;  // chi above epsilon but any model decrease is below the guard
  auto res = arpcc_minimize(run.counted, FeasibleSet::whole_space(1), cfg, x0,
                            run.counters);
  REQUIRE(res.status == ArpccStatus::BudgetExceeded);
  REQUIRE(res.trace.size() == 5);
  for (const auto& rec : res.trace) {
    CHECK(std::isnan(rec.rho));
    CHECK(std::isnan(rec.f_trial));
    CHECK(rec.outcome == IterationOutcome::unsuccessful);
    CHECK(rec.sigma_next == 2.0 * rec.sigma);
  }
  CHECK(run.counters.f_values == 1);  // only the start was evaluated
  CHECK(run.counters.f_derivative_sets == 1);
}

TEST_CASE("callback streams records when trace retention is off") {
  RunSetup run(half_square(2));
  ArpccConfig cfg;
  cfg.epsilon = 1e-6;
  cfg.keep_trace = false;
  Eigen::VectorXd x0(2);
  x0 << 4.0, -2.0;
  std::vector<IterationRecord> seen;
  auto res = arpcc_minimize(
      run.counted, FeasibleSet::whole_space(2), cfg, x0, run.counters,
      nullptr, [&](const IterationRecord& r) { seen.push_back(r); });
  CHECK(res.trace.empty());
  REQUIRE(static_cast<long>(seen.size()) == res.total_iterations);
  for (size_t i = 0; i < seen.size(); ++i)
    CHECK(seen[i].k == static_cast<long>(i));
}

namespace {

// Asserts the per-run invariants the complexity analysis promises, using
// the problem's known derivative Lipschitz constant.
void check_run_invariants(const std::string& name, int p, double epsilon) {
  INFO("problem=" << name << " p=" << p);
  auto problem = find_problem(name);
  RunSetup run(problem.objective);
  ArpccConfig cfg;
  cfg.p = p;
  cfg.epsilon = epsilon;
  auto res = arpcc_minimize(run.counted, problem.feasible, cfg,
                            problem.default_start, run.counters);
  REQUIRE(res.status == ArpccStatus::CriticalityReached);

  const double L = problem.lipschitz_p(p).value();
  const double sigma_bound = sigma_upper_bound(cfg, L);
  const double kn = kappa_n(problem.dim());
  const double ks =
      kappa_s(p, cfg.eta1, cfg.sigma_min, kn, L, cfg.subsolver.theta, sigma_bound);
  const double power = (p + 1.0) / p;

  // (f) the regularization weight never exceeds its theoretical ceiling
  CHECK(res.sigma_max_observed <= sigma_bound * (1.0 + 1e-9));

  // (b) unsuccessful iterations are rate-limited by successful ones
  const double ku = kappa_u(cfg.gamma1, cfg.gamma2, cfg.sigma0, sigma_bound);
  CHECK(static_cast<double>(res.total_iterations) <=
        ku * static_cast<double>(res.successful_iterations) + 1.0);

  // (e) the successful-iteration count obeys the complexity bound
  const double f0 = res.trace.empty() ? res.value_eps : res.trace[0].f_current;
  CHECK(static_cast<double>(res.successful_iterations) <=
        std::floor(ks * (f0 - problem.f_low) / std::pow(epsilon, power)));

  double prev_f = f0;
  for (size_t i = 0; i < res.trace.size(); ++i) {
    const auto& rec = res.trace[i];
    // (a) the step achieves the regularizer-share model decrease
    CHECK(rec.model_decrease >=
          rec.sigma / (p + 1.0) * std::pow(rec.step_norm, p + 1.0) - 1e-12);
    // sub-term conditions were honored
    CHECK(rec.trial_feasible);
    CHECK(rec.chi_model_trial <= rec.sub3_bound + 1e-12);
    CHECK(rec.f_current == prev_f);

    const bool accepted = rec.outcome != IterationOutcome::unsuccessful;
    if (std::isnan(rec.rho)) {
      CHECK(!accepted);
      CHECK(std::isnan(rec.f_trial));
    } else {
      CHECK(accepted == (rec.rho >= cfg.eta1));
      CHECK((rec.outcome == IterationOutcome::very_successful) ==
            (rec.rho > cfg.eta2));
    }
    if (accepted) {
      // (c) accepted trials realize at least the eta1 share of the decrease
      CHECK(rec.f_current - rec.f_trial >=
            cfg.eta1 * rec.model_decrease * (1.0 - 1e-12));
      // (d) per-success decrease dominates the successor criticality measure
      const double chi_next =
          i + 1 < res.trace.size() ? res.trace[i + 1].chi : res.chi_eps;
      CHECK(rec.f_current - rec.f_trial >= std::pow(chi_next, power) / ks - 1e-12);
      prev_f = rec.f_trial;
    }
  }
  CHECK(res.value_eps == prev_f);

  // out-of-band criticality audit with an uncounted oracle
  const auto fresh = problem.objective->eval_taylor(res.x_eps, 1);
  CHECK(chi(fresh.gradient(), res.x_eps, problem.feasible) <=
        cfg.epsilon + 1e-12);

  // evaluation accounting: one value per attempted trial plus the start,
  // one derivative set per accepted iterate plus the start
  long attempted = 0;
  for (const auto& rec : res.trace)
    if (!std::isnan(rec.rho)) ++attempted;
  CHECK(run.counters.f_values == attempted + 1);
  CHECK(run.counters.f_derivative_sets == res.successful_iterations + 1);
  CHECK(run.counters.c_values == 0);
  CHECK(run.counters.c_derivative_sets == 0);
}

}  // namespace

TEST_CASE("run invariants hold across orders and problems") {
  for (int p : {1, 2, 3}) check_run_invariants("quartic-box", p, 1e-4);
  check_run_invariants("rosenbrock", 2, 1e-4);
  check_run_invariants("rosenbrock", 3, 1e-4);
  check_run_invariants("linear-box", 1, 1e-4);
}
