#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "arp/arpcc.hpp"
#include "arp/errors.hpp"
#include "arp/oracle.hpp"
#include "arp/residual.hpp"

namespace arp {

struct ArpgcConfig {
  double eps_p = 1e-3;
  double eps_d = 1e-3;
  double delta = 2.0;
  double beta = 1.0;
  ArpccConfig inner;  // inner.epsilon is unused: phase stops are the predicates
  long max_outer_targets = 0;  // 0 picks the default safeguard

  double eps_p_limit() const {
    return std::min({beta, std::pow((delta - 1.0) / delta, inner.p), 1.0});
  }

  void validate() const {
    inner.validate();
    if (!(delta > 1.0))
      throw std::invalid_argument("ArpgcConfig: need delta > 1");
    if (!(beta > 0.0))
      throw std::invalid_argument("ArpgcConfig: need beta > 0");
    if (!(eps_p > 0.0 && eps_p <= eps_p_limit()))
      throw std::invalid_argument(
          "ArpgcConfig: need eps_p in (0, min(beta, ((delta-1)/delta)^p, 1)]");
    if (!(eps_d > 0.0 && eps_d < 1.0))
      throw std::invalid_argument("ArpgcConfig: need eps_d in (0,1)");
    if (max_outer_targets < 0)
      throw std::invalid_argument(
          "ArpgcConfig: max_outer_targets must be non-negative");
  }

  // eps_p - eps_p^((p+1)/p), the near-feasibility radius.
  double residual_threshold() const {
    return eps_p - std::pow(eps_p, (inner.p + 1.0) / inner.p);
  }
};

enum class TargetKind { K_plus, K_minus, terminal };

inline const char* to_string(TargetKind k) {
  switch (k) {
    case TargetKind::K_plus: return "K_plus";
    case TargetKind::K_minus: return "K_minus";
    default: return "terminal";
  }
}

struct TargetRecord {
  long k = 0;
  double t = 0.0;  // target the inner run minimized against
  TargetKind kind = TargetKind::terminal;
  Eigen::VectorXd x;       // iterate reached under this target
  double r_norm = 0.0;     // |r(x, t)|
  double c_norm = 0.0;     // |c(x)|
  double f_value = 0.0;    // f(x)
  double chi_mu = 0.0;     // criticality of mu(., t) at x
  double t_next = std::numeric_limits<double>::quiet_NaN();
  double r_norm_next = std::numeric_limits<double>::quiet_NaN();
  double chi_mu_next = std::numeric_limits<double>::quiet_NaN();
  long inner_iterations = 0;
  long inner_successful = 0;
  EvalCounters counters;  // run totals after this target
};

enum class CertificateStatus { ScaledKKT, InfeasibleCritical };

inline const char* to_string(CertificateStatus s) {
  return s == CertificateStatus::ScaledKKT ? "ScaledKKT" : "InfeasibleCritical";
}

struct Certificate {
  CertificateStatus status = CertificateStatus::InfeasibleCritical;
  Eigen::VectorXd x_eps;
  std::optional<double> t_eps;  // absent for Phase-1 exits
  std::optional<Eigen::VectorXd> y_eps;
  double f_value = std::numeric_limits<double>::quiet_NaN();
  double c_norm = std::numeric_limits<double>::quiet_NaN();
  // Criticality of 1/2 |c|^2 (infeasible-critical exits only).
  double chi_feasibility = std::numeric_limits<double>::quiet_NaN();
  // Criticality of mu(., t_eps) and of the Lagrangian (KKT exits only).
  double chi_mu = std::numeric_limits<double>::quiet_NaN();
  double chi_lambda = std::numeric_limits<double>::quiet_NaN();
  double y_scale = std::numeric_limits<double>::quiet_NaN();  // |(y,1)|
};

struct ArpgcResult {
  Certificate certificate;
  bool phase1_feasible = false;
  ArpccResult phase1;
  double t1 = std::numeric_limits<double>::quiet_NaN();
  std::vector<TargetRecord> targets;
  std::vector<ArpccResult> inner_runs;  // one per target, aligned with targets
  EvalCounters counters;
};

// t_1 = f(x_1) - sqrt(eps_p^2 - |c(x_1)|^2), so |r(x_1, t_1)| = eps_p.
inline double initial_target(double f1, double c_norm1, double eps_p) {
  if (!(c_norm1 <= eps_p))
    throw std::invalid_argument("initial_target: |c| exceeds eps_p");
  return f1 - std::sqrt(eps_p * eps_p - c_norm1 * c_norm1);
}

inline Eigen::VectorXd recover_multipliers(const Eigen::VectorXd& c_vec,
                                           double f_val, double t_val) {
  if (!(f_val > t_val))
    throw std::invalid_argument("recover_multipliers: need f > t");
  return c_vec / (f_val - t_val);
}

namespace detail {

inline long default_max_targets(const Problem& P, const ArpgcConfig& cfg) {
  if (cfg.max_outer_targets > 0) return cfg.max_outer_targets;
  if (P.f_up) {
    const double per = std::pow(cfg.eps_p, (cfg.inner.p + 1.0) / cfg.inner.p);
    return 10 * static_cast<long>(std::ceil((*P.f_up - P.f_low + 1.0) / per));
  }
  return 1000000;
}

}  // namespace detail

// Two-phase solve: drive |c| into the near-feasibility radius, then track a
// decreasing sequence of objective targets through the merit function mu,
// finishing with a scaled-KKT or infeasible-critical certificate.
inline ArpgcResult arpgc_solve(const Problem& P, const ArpgcConfig& cfg) {
  cfg.validate();
  P.validate();
  if (P.num_constraints() == 0)
    throw std::invalid_argument("arpgc_solve: problem has no equality constraints");

  ArpgcResult res;
  CompositeResidual mu(P, res.counters, false);
  const double thresh = cfg.residual_threshold();
  ArpccConfig icfg = cfg.inner;

  // Phase 1: approximate feasibility on 1/2 |c|^2.
  const StopPredicate phase1_stop = [&](const StopContext& ctx) {
    const double cn = std::sqrt(2.0 * std::max(ctx.value, 0.0));
    return cn <= thresh || ctx.chi <= cfg.eps_d * cn;
  };
  res.phase1 = arpcc_minimize(mu, P.feasible, icfg, P.default_start,
                              res.counters, phase1_stop);
  if (res.phase1.status == ArpccStatus::BudgetExceeded)
    throw PhaseBudgetExceeded("arpgc_solve: phase 1 exhausted the inner budget");
  const Eigen::VectorXd x1 = res.phase1.x_eps;
  const double c1 = mu.constraint_norm(x1);
  res.phase1_feasible = c1 <= thresh;

  if (!res.phase1_feasible) {
    res.certificate.status = CertificateStatus::InfeasibleCritical;
    res.certificate.x_eps = x1;
    res.certificate.c_norm = c1;
    res.certificate.chi_feasibility = res.phase1.chi_eps;
    return res;
  }

  // Phase 2: target tracking on mu(x, t).
  mu.set_include_objective(true);
  double t = initial_target(mu.objective_value(x1), c1, cfg.eps_p);
  res.t1 = t;
  Eigen::VectorXd x = x1;
  const long max_targets = detail::default_max_targets(P, cfg);

  const auto build_certificate = [&](const Eigen::VectorXd& xe, double te) {
    Certificate cert;
    cert.x_eps = xe;
    cert.t_eps = te;
    const Eigen::VectorXd r = mu.residual(xe);
    const Eigen::VectorXd c_vec = r.head(P.num_constraints());
    cert.f_value = mu.objective_value(xe);
    cert.c_norm = c_vec.norm();
    if (cert.f_value - te <= 1e-12) {
      // Degenerate target: x is critical for the feasibility measure alone.
      cert.status = CertificateStatus::InfeasibleCritical;
      cert.chi_feasibility =
          mu.rescore_chi_at_new_target(cert.f_value, P.feasible);
    } else {
      cert.status = CertificateStatus::ScaledKKT;
      cert.y_eps = recover_multipliers(c_vec, cert.f_value, te);
      cert.chi_mu = mu.rescore_chi_at_new_target(te, P.feasible);
      cert.chi_lambda = cert.chi_mu / (cert.f_value - te);
      cert.y_scale = std::sqrt(cert.y_eps->squaredNorm() + 1.0);
    }
    return cert;
  };

  for (long k = 1;; ++k) {
    if (k > max_targets)
      throw MaxTargetsExceeded("arpgc_solve: outer target budget exhausted");
    mu.set_target(t);
    const StopPredicate phase2_stop = [&](const StopContext& ctx) {
      const double rn = std::sqrt(2.0 * std::max(ctx.value, 0.0));
      return rn <= thresh || mu.objective_value(ctx.x) < t ||
             ctx.chi <= cfg.eps_p * cfg.eps_d;
    };
    ArpccResult inner = arpcc_minimize(mu, P.feasible, icfg, x, res.counters,
                                       phase2_stop);
    if (inner.status == ArpccStatus::BudgetExceeded)
      throw PhaseBudgetExceeded(
          "arpgc_solve: inner budget exhausted at target " + std::to_string(k));

    TargetRecord rec;
    rec.k = k;
    rec.t = t;
    rec.x = inner.x_eps;
    rec.r_norm = mu.residual(inner.x_eps).norm();
    rec.c_norm = mu.constraint_norm(inner.x_eps);
    rec.f_value = mu.objective_value(inner.x_eps);
    rec.chi_mu = inner.chi_eps;
    rec.inner_iterations = inner.total_iterations;
    rec.inner_successful = inner.successful_iterations;

    double t_next = std::numeric_limits<double>::quiet_NaN();
    bool terminal = false;
    if (rec.r_norm <= thresh) {
      t_next = initial_target(rec.f_value, rec.c_norm, cfg.eps_p);
      rec.kind = TargetKind::K_plus;
    } else if (rec.f_value < t) {
      t_next = 2.0 * rec.f_value - t;
      rec.kind = TargetKind::K_minus;
    } else {
      rec.kind = TargetKind::terminal;
      terminal = true;
    }
    if (!terminal) {
      rec.t_next = t_next;
      const double fr = rec.f_value - t_next;
      rec.r_norm_next = std::sqrt(rec.c_norm * rec.c_norm + fr * fr);
      rec.chi_mu_next = mu.rescore_chi_at_new_target(t_next, P.feasible);
      terminal = rec.chi_mu_next <= cfg.eps_p * cfg.eps_d;
    }

    rec.counters = res.counters;
    res.targets.push_back(rec);
    res.inner_runs.push_back(std::move(inner));

    if (terminal) {
      res.certificate = build_certificate(
          rec.x, rec.kind == TargetKind::terminal ? t : t_next);
      return res;
    }
    x = rec.x;
    t = t_next;
  }
}

// Re-derives the certificate inequalities from fresh evaluations charged to a
// local shadow counter; returns false (with a reason) on any violation.
inline bool verify_certificate(const Problem& P, const Certificate& cert,
                               const ArpgcConfig& cfg,
                               std::string* why = nullptr) {
  const auto fail = [&](const std::string& reason) {
    if (why) *why = reason;
    return false;
  };
  EvalCounters shadow;
  const Eigen::VectorXd& x = cert.x_eps;
  const double thresh = cfg.residual_threshold();

  std::vector<TaylorData> cdata;
  for (const auto& c : P.equality_constraints) {
    cdata.push_back(checked_taylor(*c, x, 1));
    ++shadow.c_derivative_sets;
  }
  Eigen::VectorXd c_vec(P.num_constraints());
  Eigen::VectorXd g_feas = Eigen::VectorXd::Zero(P.dim());
  for (size_t i = 0; i < cdata.size(); ++i) {
    c_vec(static_cast<int>(i)) = cdata[i].value;
    g_feas += cdata[i].value * cdata[i].gradient();
  }
  const double cn = c_vec.norm();

  if (cert.status == CertificateStatus::InfeasibleCritical) {
    const double chi_feas = chi(g_feas, x, P.feasible);
    if (!cert.t_eps) {
      if (!(cn > thresh - 1e-12))
        return fail("infeasible certificate: |c| not above the threshold");
      if (!(chi_feas <= cfg.eps_d * cn + 1e-9))
        return fail("infeasible certificate: feasibility criticality too large");
      return true;
    }
    // Phase-2 exit with f = t: the proof chain carries a delta factor.
    if (!(cn >= cfg.eps_p / cfg.delta - 1e-12))
      return fail("infeasible certificate: |c| below eps_p/delta");
    if (!(chi_feas <= cfg.delta * cfg.eps_d * cn + 1e-9))
      return fail("infeasible certificate: feasibility criticality too large");
    return true;
  }

  if (!cert.t_eps || !cert.y_eps)
    return fail("KKT certificate: missing target or multipliers");
  const double te = *cert.t_eps;
  const TaylorData fdata = checked_taylor(*P.objective, x, 1);
  ++shadow.f_derivative_sets;
  const double fe = fdata.value;

  if (!(cn <= cfg.eps_p + 1e-9))
    return fail("KKT certificate: |c| exceeds eps_p");
  if (!(fe >= te - 1e-12))
    return fail("KKT certificate: f below the final target");
  if (!(fe - te > 1e-13))
    return fail("KKT certificate: degenerate multiplier scale");

  const Eigen::VectorXd y = recover_multipliers(c_vec, fe, te);
  if (!y.isApprox(*cert.y_eps, 1e-9))
    return fail("KKT certificate: multipliers disagree with c/(f - t)");
  Eigen::VectorXd g_lag = fdata.gradient();
  for (size_t i = 0; i < cdata.size(); ++i)
    g_lag += y(static_cast<int>(i)) * cdata[i].gradient();
  const double chi_lag = chi(g_lag, x, P.feasible);
  const double y_scale = std::sqrt(y.squaredNorm() + 1.0);
  if (!(chi_lag <= cfg.delta * cfg.eps_d * y_scale + 1e-9))
    return fail("KKT certificate: Lagrangian criticality too large");

  // Termination conditions at (x_eps, t_eps).
  const double fr = fe - te;
  const double rn = std::sqrt(cn * cn + fr * fr);
  if (!(rn >= thresh - 1e-9))
    return fail("KKT certificate: residual below the termination floor");
  Eigen::VectorXd g_mu = g_feas + fr * fdata.gradient();
  if (!(chi(g_mu, x, P.feasible) <= cfg.eps_p * cfg.eps_d + 1e-9))
    return fail("KKT certificate: merit criticality above eps_p eps_d");
  return true;
}

}  // namespace arp
