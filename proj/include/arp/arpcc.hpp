#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "arp/criticality.hpp"
#include "arp/errors.hpp"
#include "arp/model.hpp"
#include "arp/oracle.hpp"
#include "arp/subsolver.hpp"

namespace arp {

struct ArpccConfig {
  int p = 2;
  double sigma0 = 1.0;
  double sigma_min = 1e-8;
  double gamma1 = 0.5;
  double gamma2 = 2.0;
  double gamma3 = 4.0;
  double eta1 = 0.01;
  double eta2 = 0.9;
  double epsilon = 1e-4;
  long max_outer_iters = 1000000;
  SubsolverControls subsolver;
  bool keep_trace = true;  // retain per-iteration records in the result

  void validate() const {
    if (p < 1 || p > 3)
      throw std::invalid_argument("ArpccConfig: p must be in {1,2,3}");
    if (!(sigma_min > 0.0 && sigma0 >= sigma_min))
      throw std::invalid_argument("ArpccConfig: need sigma0 >= sigma_min > 0");
    if (!(gamma1 > 0.0 && gamma1 < 1.0))
      throw std::invalid_argument("ArpccConfig: need gamma1 in (0,1)");
    if (!(gamma2 > 1.0))
      throw std::invalid_argument("ArpccConfig: need gamma2 > 1");
    if (!(gamma3 >= gamma2))
      throw std::invalid_argument("ArpccConfig: need gamma3 >= gamma2");
    if (!(eta1 > 0.0 && eta2 >= eta1 && eta2 < 1.0))
      throw std::invalid_argument("ArpccConfig: need 1 > eta2 >= eta1 > 0");
    if (!(epsilon > 0.0 && epsilon <= 1.0))
      throw std::invalid_argument("ArpccConfig: need epsilon in (0,1]");
    if (max_outer_iters <= 0)
      throw std::invalid_argument("ArpccConfig: max_outer_iters must be positive");
    subsolver.validate();
  }
};

enum class IterationOutcome { very_successful, successful, unsuccessful };

inline const char* to_string(IterationOutcome o) {
  switch (o) {
    case IterationOutcome::very_successful: return "very_successful";
    case IterationOutcome::successful: return "successful";
    default: return "unsuccessful";
  }
}

struct IterationRecord {
  long k = 0;
  Eigen::VectorXd x;  // iterate x_k the model was built at
  double sigma = 0.0;
  double chi = 0.0;  // chi of the objective at x_k
  double step_norm = 0.0;
  // NaN when the decrease guard declared the iteration unsuccessful
  // without evaluating the objective at the trial point.
  double rho = std::numeric_limits<double>::quiet_NaN();
  IterationOutcome outcome = IterationOutcome::unsuccessful;
  double f_current = 0.0;
  double f_trial = std::numeric_limits<double>::quiet_NaN();
  double model_decrease = 0.0;   // T(0) - T(s)
  double chi_model_trial = 0.0;  // chi of the model at x_k + s
  double sub3_bound = 0.0;       // theta |s|^p
  bool trial_feasible = false;
  double sigma_next = 0.0;
  EvalCounters counters;  // run totals after this iteration's evaluations
};

enum class ArpccStatus { CriticalityReached, CustomPredicate, BudgetExceeded };

inline const char* to_string(ArpccStatus s) {
  switch (s) {
    case ArpccStatus::CriticalityReached: return "CriticalityReached";
    case ArpccStatus::CustomPredicate: return "CustomPredicate";
    default: return "BudgetExceeded";
  }
}

struct StopContext {
  const Eigen::VectorXd& x;
  double value;
  const Eigen::VectorXd& gradient;
  double chi;
};

// Replaces the built-in criticality test entirely when supplied; evaluated
// at the starting point and after every accepted iterate.
using StopPredicate = std::function<bool(const StopContext&)>;
using IterationCallback = std::function<void(const IterationRecord&)>;

struct ArpccResult {
  Eigen::VectorXd x_eps;
  ArpccStatus status = ArpccStatus::BudgetExceeded;
  std::vector<IterationRecord> trace;
  EvalCounters counters;
  double value_eps = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd gradient_eps;
  double chi_eps = std::numeric_limits<double>::quiet_NaN();
  long successful_iterations = 0;
  long total_iterations = 0;
  double sigma_max_observed = 0.0;
};

// Regularization-weight update; NaN rho (skipped trial) lands in the
// unsuccessful branch.
inline double sigma_update(double sigma, double rho, const ArpccConfig& cfg) {
  if (rho > cfg.eta2) return std::max(cfg.sigma_min, cfg.gamma1 * sigma);
  if (rho >= cfg.eta1) return sigma;
  return cfg.gamma2 * sigma;
}

// Iteration-count ratio: total <= kappa_u * successful.
inline double kappa_u(double gamma1, double gamma2, double sigma0,
                      double sigma_max) {
  return 1.0 + std::abs(std::log(gamma1)) / std::log(gamma2) +
         std::log(sigma_max / sigma0) / std::log(gamma2);
}

// Per-success decrease constant in the evaluation-complexity bound.
inline double kappa_s(int p, double eta1, double sigma_min, double kappa_n,
                      double L, double theta, double sigma_max) {
  return (p + 1.0) / (eta1 * sigma_min) *
         std::pow(2.0 * kappa_n * (L + theta + sigma_max), (p + 1.0) / p);
}

// Theoretical ceiling on sigma given a derivative Lipschitz constant L.
inline double sigma_upper_bound(const ArpccConfig& cfg, double L) {
  return std::max(cfg.sigma0,
                  cfg.gamma3 * L * (cfg.p + 1.0) / (cfg.p * (1.0 - cfg.eta2)));
}

// Adaptive-regularization minimization of h over F. The oracle h is
// expected to charge evaluations to the counters aliased by `counters`;
// records snapshot those totals after each iteration.
inline ArpccResult arpcc_minimize(const SmoothFunction& h, const FeasibleSet& F,
                                  const ArpccConfig& cfg,
                                  const Eigen::VectorXd& x_start,
                                  const EvalCounters& counters,
                                  const StopPredicate& stop = nullptr,
                                  const IterationCallback& on_iteration = nullptr) {
  cfg.validate();
  if (h.dim() != F.dim())
    throw std::invalid_argument("arpcc_minimize: oracle/set dimension mismatch");

  ArpccResult res;
  Eigen::VectorXd x = F.project(x_start);
  double fx = h.eval_value(x);
  TaylorData taylor = h.eval_taylor(x, cfg.p);
  Eigen::VectorXd grad = taylor.gradient();
  double chi_x = chi(grad, x, F);
  double sigma = cfg.sigma0;
  res.sigma_max_observed = sigma;

  const auto should_stop = [&]() {
    if (stop) return static_cast<bool>(stop(StopContext{x, fx, grad, chi_x}));
    return chi_x <= cfg.epsilon;
  };
  const auto finalize = [&](ArpccStatus status) {
    res.x_eps = x;
    res.status = status;
    res.counters = counters;
    res.value_eps = fx;
    res.gradient_eps = grad;
    res.chi_eps = chi_x;
    return res;
  };

  if (should_stop())
    return finalize(stop ? ArpccStatus::CustomPredicate
                         : ArpccStatus::CriticalityReached);

  for (long k = 0; k < cfg.max_outer_iters; ++k) {
    ModelState M = build_model(x, taylor, sigma);
    Eigen::VectorXd s = solve_subproblem(M, F, cfg.subsolver);
    StepCheck check = check_step_conditions(M, F, cfg.subsolver.theta, s);
    if (!check.ok())
      throw SolverError("arpcc_minimize: subsolver step failed re-verification");

    IterationRecord rec;
    rec.k = k;
    rec.x = x;
    rec.sigma = sigma;
    rec.chi = chi_x;
    rec.step_norm = s.norm();
    rec.f_current = fx;
    rec.model_decrease = model_decrease(M, s);
    rec.chi_model_trial = check.chi_model;
    rec.sub3_bound = check.bound;
    rec.trial_feasible = check.feasible;

    // Acceptance ratio; the guard skips the trial evaluation when the
    // predicted decrease is below resolvable precision.
    if (rec.model_decrease > 1e-15 * std::max(1.0, std::abs(fx))) {
      rec.f_trial = h.eval_value(x + s);
      rec.rho = (fx - rec.f_trial) / rec.model_decrease;
    }

    const bool accepted = rec.rho >= cfg.eta1;
    rec.outcome = rec.rho > cfg.eta2
                      ? IterationOutcome::very_successful
                      : (accepted ? IterationOutcome::successful
                                  : IterationOutcome::unsuccessful);
    sigma = sigma_update(sigma, rec.rho, cfg);
    rec.sigma_next = sigma;
    res.sigma_max_observed = std::max(res.sigma_max_observed, sigma);

    if (accepted) {
      x += s;
      fx = rec.f_trial;
      taylor = h.eval_taylor(x, cfg.p);
      grad = taylor.gradient();
      chi_x = chi(grad, x, F);
      ++res.successful_iterations;
    }

    rec.counters = counters;
    ++res.total_iterations;
    if (on_iteration) on_iteration(rec);
    if (cfg.keep_trace) res.trace.push_back(std::move(rec));

    if (accepted && should_stop())
      return finalize(stop ? ArpccStatus::CustomPredicate
                           : ArpccStatus::CriticalityReached);
  }
  return finalize(ArpccStatus::BudgetExceeded);
}

}  // namespace arp
