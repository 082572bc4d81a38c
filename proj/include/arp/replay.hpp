#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "arp/trace.hpp"

namespace arp {

struct InvariantResult {
  std::string name;
  long checked = 0;
  long violations = 0;
  std::vector<std::string> messages;  // first few violation details
  bool passed() const { return violations == 0; }
};

struct ReplayReport {
  std::vector<InvariantResult> invariants;
  std::vector<std::string> warnings;
  long records = 0;
  bool passed() const {
    for (const auto& inv : invariants)
      if (!inv.passed()) return false;
    return true;
  }
};

namespace detail {

class Auditor {
 public:
  explicit Auditor(ReplayReport& rep) : rep_(rep) {}

  void observe(const std::string& name, long n = 1) { slot(name).checked += n; }

  void require(const std::string& name, bool ok, const std::string& msg) {
    InvariantResult& inv = slot(name);
    ++inv.checked;
    if (ok) return;
    ++inv.violations;
    if (inv.messages.size() < 5) inv.messages.push_back(msg);
  }

 private:
  InvariantResult& slot(const std::string& name) {
    for (auto& inv : rep_.invariants)
      if (inv.name == name) return inv;
    rep_.invariants.push_back(InvariantResult{name, 0, 0, {}, });
    return rep_.invariants.back();
  }

  ReplayReport& rep_;
};

struct ReplayedIter {
  std::string run;
  long k;
  double sigma, chi, step_norm, rho, f_current, f_trial;
  double model_decrease, chi_model_trial, sub3_bound, sigma_next;
  bool trial_feasible;
  std::string outcome;
  EvalCounters counters;
  bool accepted() const { return outcome != "unsuccessful"; }
};

inline ReplayedIter parse_iter(const TraceRecord& rec) {
  const ojson& p = rec.payload;
  ReplayedIter it;
  it.run = rec.run;
  it.k = trace_int(p, "k");
  it.sigma = trace_num(p, "sigma");
  it.chi = trace_num(p, "chi");
  it.step_norm = trace_num(p, "step_norm");
  it.rho = trace_num(p, "rho");
  it.f_current = trace_num(p, "f_current");
  it.f_trial = trace_num(p, "f_trial");
  it.model_decrease = trace_num(p, "model_decrease");
  it.chi_model_trial = trace_num(p, "chi_model_trial");
  it.sub3_bound = trace_num(p, "sub3_bound");
  it.sigma_next = trace_num(p, "sigma_next");
  it.trial_feasible = trace_bool(p, "trial_feasible");
  it.outcome = trace_str(p, "outcome");
  it.counters = trace_counters(p);
  return it;
}

struct ReplayedTarget {
  long k;
  double t, r_norm, c_norm, f_value, t_next, r_norm_next;
  std::string kind;
};

inline ReplayedTarget parse_target(const TraceRecord& rec) {
  const ojson& p = rec.payload;
  ReplayedTarget t;
  t.k = trace_int(p, "k");
  t.t = trace_num(p, "t");
  t.r_norm = trace_num(p, "r_norm");
  t.c_norm = trace_num(p, "c_norm");
  t.f_value = trace_num(p, "f_value");
  t.t_next = trace_num(p, "t_next");
  t.r_norm_next = trace_num(p, "r_norm_next");
  t.kind = trace_str(p, "kind");
  return t;
}

inline std::string at(const std::string& run, long k) {
  return " at " + run + "#" + std::to_string(k);
}

}  // namespace detail

// Re-validates every traced invariant by pure arithmetic on the records;
// throws SolverError on a structurally malformed trace.
inline ReplayReport replay_check(const std::vector<TraceRecord>& trace) {
  ReplayReport rep;
  rep.records = static_cast<long>(trace.size());
  if (trace.empty()) {
    rep.warnings.push_back("empty trace: invariants hold vacuously");
    return rep;
  }
  if (trace[0].record != "run-header")
    throw SolverError("replay_check: first record must be a run-header");
  for (size_t i = 1; i < trace.size(); ++i)
    if (trace[i].record == "run-header")
      throw SolverError("replay_check: multiple run-header records");

  const ojson& H = trace[0].payload;
  const std::string algorithm = trace_str(H, "algorithm");
  if (algorithm != "arpcc" && algorithm != "arpgc")
    throw SolverError("replay_check: unknown algorithm '" + algorithm + "'");
  ArpccConfig cfg;
  cfg.p = static_cast<int>(trace_int(H, "p"));
  cfg.sigma0 = trace_num(H, "sigma0");
  cfg.sigma_min = trace_num(H, "sigma_min");
  cfg.gamma1 = trace_num(H, "gamma1");
  cfg.gamma2 = trace_num(H, "gamma2");
  cfg.gamma3 = trace_num(H, "gamma3");
  cfg.eta1 = trace_num(H, "eta1");
  cfg.eta2 = trace_num(H, "eta2");
  cfg.epsilon = trace_num(H, "epsilon");
  cfg.subsolver.theta = trace_num(H, "theta");
  const bool custom_stop = trace_bool(H, "custom_stop");
  const int dim = static_cast<int>(trace_int(H, "dim"));
  const double f_low = trace_num(H, "f_low");
  const double f_up = trace_num(H, "f_up");        // NaN when unknown
  const double L = trace_num(H, "lipschitz");      // NaN when unknown
  const double power = (cfg.p + 1.0) / cfg.p;

  std::vector<detail::ReplayedIter> iters;
  std::vector<detail::ReplayedTarget> targets;
  const ojson* certificate = nullptr;
  std::vector<const EvalCounters*> counter_stream;
  std::vector<EvalCounters> counter_storage;
  counter_storage.reserve(trace.size());
  for (size_t i = 1; i < trace.size(); ++i) {
    const TraceRecord& rec = trace[i];
    if (rec.record == "arpcc-iter") {
      iters.push_back(detail::parse_iter(rec));
      counter_storage.push_back(iters.back().counters);
    } else if (rec.record == "arpgc-target") {
      targets.push_back(detail::parse_target(rec));
      counter_storage.push_back(trace_counters(rec.payload));
    } else if (rec.record == "certificate") {
      if (certificate)
        throw SolverError("replay_check: multiple certificate records");
      certificate = &rec.payload;
      counter_storage.push_back(trace_counters(rec.payload));
    } else {
      throw SolverError("replay_check: unknown record kind '" + rec.record +
                        "'");
    }
  }
  for (const auto& c : counter_storage) counter_stream.push_back(&c);

  detail::Auditor audit(rep);

  // Per-iteration step conditions and the sigma update law.
  const detail::ReplayedIter* prev = nullptr;
  for (const auto& it : iters) {
    const std::string where = detail::at(it.run, it.k);
    audit.require("dphi",
                  it.model_decrease >=
                      it.sigma / (cfg.p + 1.0) *
                              std::pow(it.step_norm, cfg.p + 1.0) -
                          1e-12,
                  "model decrease below the regularizer share" + where);
    audit.require("sub-terms", it.trial_feasible,
                  "trial point left the feasible set" + where);
    audit.require("sub-terms",
                  it.chi_model_trial <= it.sub3_bound + 1e-12,
                  "model criticality above theta |s|^p" + where);
    const double bound = cfg.subsolver.theta * std::pow(it.step_norm, cfg.p);
    audit.require("sub-terms",
                  std::abs(it.sub3_bound - bound) <=
                      1e-12 * std::max(1.0, std::abs(bound)),
                  "recorded theta |s|^p disagrees with config" + where);

    const double expected_next = sigma_update(it.sigma, it.rho, cfg);
    audit.require("sigma-update", it.sigma_next == expected_next,
                  "sigma_next disagrees with the update law" + where);
    const bool fresh_segment = !prev || prev->run != it.run;
    if (fresh_segment)
      audit.require("sigma-update", it.sigma == cfg.sigma0,
                    "segment does not start at sigma0" + where);
    else
      audit.require("sigma-update", it.sigma == prev->sigma_next,
                    "sigma does not chain from the previous record" + where);

    if (std::isnan(it.rho)) {
      audit.require("outcome-consistency",
                    it.outcome == "unsuccessful" && std::isnan(it.f_trial),
                    "skipped trial must be unsuccessful with no f_trial" + where);
    } else {
      audit.require("outcome-consistency",
                    it.accepted() == (it.rho >= cfg.eta1) &&
                        (it.outcome == "very_successful") ==
                            (it.rho > cfg.eta2),
                    "outcome label disagrees with rho thresholds" + where);
    }

    if (!fresh_segment)
      audit.require("monotone-f",
                    it.f_current ==
                        (prev->accepted() ? prev->f_trial : prev->f_current),
                    "f_current does not thread from the previous record" + where);
    if (it.accepted())
      audit.require("monotone-f",
                    it.f_current - it.f_trial >=
                        cfg.eta1 * it.model_decrease * (1.0 - 1e-12),
                    "accepted step below the eta1 decrease share" + where);
    prev = &it;
  }

  // Iteration-count ratio per segment (successful iterations pay for the
  // unsuccessful ones through the sigma-update geometry).
  for (size_t i = 0; i < iters.size();) {
    size_t j = i;
    long total = 0, successes = 0;
    double sigma_max = cfg.sigma0;
    while (j < iters.size() && iters[j].run == iters[i].run) {
      ++total;
      if (iters[j].accepted()) ++successes;
      sigma_max = std::max({sigma_max, iters[j].sigma, iters[j].sigma_next});
      ++j;
    }
    const double growth = std::log(sigma_max / cfg.sigma0) / std::log(cfg.gamma2);
    if (successes > 0) {
      const double ku = kappa_u(cfg.gamma1, cfg.gamma2, cfg.sigma0, sigma_max);
      audit.require("iteration-ratio",
                    static_cast<double>(total) <=
                        ku * static_cast<double>(successes) + 1.0,
                    "total iterations exceed kappa_u * successes + 1 in segment " +
                        iters[i].run);
    } else {
      audit.require("iteration-ratio",
                    static_cast<double>(total) <= growth + 1.0,
                    "all-unsuccessful segment longer than the sigma headroom in " +
                        iters[i].run);
    }
    i = j;
  }

  // Bounds that need the derivative Lipschitz constant.
  if (algorithm == "arpcc" && std::isfinite(L)) {
    const double sigma_bound = sigma_upper_bound(cfg, L);
    const double ks = kappa_s(cfg.p, cfg.eta1, cfg.sigma_min, kappa_n(dim), L,
                              cfg.subsolver.theta, sigma_bound);
    for (size_t i = 0; i < iters.size(); ++i) {
      const auto& it = iters[i];
      audit.require("sigma-max-bound",
                    std::max(it.sigma, it.sigma_next) <=
                        sigma_bound * (1.0 + 1e-9),
                    "sigma exceeds its theoretical ceiling" +
                        detail::at(it.run, it.k));
      if (!it.accepted()) continue;
      double chi_next = std::numeric_limits<double>::quiet_NaN();
      if (i + 1 < iters.size() && iters[i + 1].run == it.run)
        chi_next = iters[i + 1].chi;
      else if (certificate)
        chi_next = trace_num(*certificate, "chi_eps");
      if (std::isnan(chi_next)) continue;
      audit.require("success-decrease",
                    it.f_current - it.f_trial >=
                        std::pow(chi_next, power) / ks - 1e-12,
                    "success decrease below the chi^((p+1)/p) share" +
                        detail::at(it.run, it.k));
    }
    if (!custom_stop && std::isfinite(f_low)) {
      long successes = 0;
      for (const auto& it : iters)
        if (it.accepted()) ++successes;
      const double f0 = iters.empty() ? f_low : iters.front().f_current;
      audit.require("success-count-bound",
                    static_cast<double>(successes) <=
                        std::floor(ks * (f0 - f_low) /
                                   std::pow(cfg.epsilon, power)),
                    "successful iterations exceed the complexity bound");
    }
  } else if (!iters.empty()) {
    rep.warnings.push_back(algorithm == "arpcc"
                               ? "no derivative Lipschitz constant: kappa_s "
                                 "bounds not replayed"
                               : "merit-function runs: kappa_s bounds not "
                                 "applicable");
  }

  // Evaluation accounting.
  for (size_t i = 1; i < counter_stream.size(); ++i) {
    const EvalCounters &a = *counter_stream[i - 1], &b = *counter_stream[i];
    audit.require("counter-replay",
                  b.f_values >= a.f_values &&
                      b.f_derivative_sets >= a.f_derivative_sets &&
                      b.c_values >= a.c_values &&
                      b.c_derivative_sets >= a.c_derivative_sets,
                  "counters decreased at trace position " + std::to_string(i));
  }
  if (algorithm == "arpcc") {
    EvalCounters prev_c{1, 1, 0, 0};  // start-point value and derivative set
    for (const auto& it : iters) {
      const long dv = std::isnan(it.rho) ? 0 : 1;
      const long dd = it.accepted() ? 1 : 0;
      audit.require("counter-replay",
                    it.counters.f_values == prev_c.f_values + dv &&
                        it.counters.f_derivative_sets ==
                            prev_c.f_derivative_sets + dd &&
                        it.counters.c_values == 0 &&
                        it.counters.c_derivative_sets == 0,
                    "objective counters off the one-per-event schedule" +
                        detail::at(it.run, it.k));
      prev_c = it.counters;
    }
    if (certificate) {
      const EvalCounters fin = trace_counters(*certificate);
      audit.require("counter-replay",
                    fin.f_values == prev_c.f_values &&
                        fin.f_derivative_sets == prev_c.f_derivative_sets,
                    "certificate counters disagree with the final record");
    }
  }

  // Outer target-tracking invariants.
  if (algorithm == "arpgc" && !targets.empty()) {
    const double eps_p = trace_num(H, "eps_p");
    const double thresh = eps_p - std::pow(eps_p, power);
    long k_plus = 0;
    for (size_t i = 0; i < targets.size(); ++i) {
      const auto& t = targets[i];
      const std::string where = " at target " + std::to_string(t.k);
      audit.require("approx-feasibility",
                    t.c_norm <= eps_p + 1e-9 && t.r_norm <= eps_p + 1e-9,
                    "residual left the eps_p tube" + where);
      if (i + 1 < targets.size())
        audit.require("t-monotone",
                      !std::isnan(t.t_next) && targets[i + 1].t == t.t_next,
                      "target does not chain to the next record" + where);
      if (!std::isnan(t.t_next)) {
        audit.require("t-monotone", t.t_next < t.t,
                      "target failed to decrease" + where);
        audit.require("f-above-target", t.f_value - t.t_next >= -1e-12,
                      "objective fell below the next target" + where);
      }
      if (t.kind == "K_plus") {
        ++k_plus;
        audit.require("t-drop", t.t - t.t_next >= std::pow(eps_p, power) - 1e-12,
                      "K_plus target drop below eps_p^((p+1)/p)" + where);
        audit.require("r-at-target",
                      std::abs(t.r_norm_next - eps_p) <= 1e-9 &&
                          t.r_norm <= thresh + 1e-15,
                      "K_plus residual not restored to eps_p" + where);
      } else if (t.kind == "K_minus") {
        audit.require("r-at-target",
                      std::abs(t.r_norm_next - t.r_norm) <= 1e-12,
                      "K_minus swap failed to preserve the residual" + where);
        audit.require("f-above-target", t.f_value < t.t,
                      "K_minus record without objective crossing" + where);
      } else {
        audit.require("f-above-target", t.f_value >= t.t - 1e-12,
                      "terminal record with objective below its target" + where);
        audit.require("r-at-target", t.r_norm > thresh - 1e-15,
                      "terminal record inside the feasibility radius" + where);
      }
    }
    if (std::isfinite(f_up)) {
      audit.require("k-plus-count",
                    static_cast<double>(k_plus) <=
                        (f_up - f_low + 1.0) / std::pow(eps_p, power),
                    "K_plus count exceeds the target-descent budget");
    }
  }

  // Certificate arithmetic.
  if (!certificate) {
    rep.warnings.push_back("no certificate record: final state not replayed");
    return rep;
  }
  const ojson& C = *certificate;
  if (algorithm == "arpcc") {
    audit.require("certificate",
                  trace_int(C, "successful_iterations") <=
                      trace_int(C, "total_iterations"),
                  "more successes than iterations");
    double sigma_max = cfg.sigma0;
    for (const auto& it : iters)
      sigma_max = std::max({sigma_max, it.sigma, it.sigma_next});
    audit.require("certificate",
                  trace_num(C, "sigma_max_observed") == sigma_max,
                  "sigma_max_observed disagrees with the trace maximum");
    if (!custom_stop && trace_str(C, "status") == "CriticalityReached")
      audit.require("certificate",
                    trace_num(C, "chi_eps") <= cfg.epsilon + 1e-12,
                    "final criticality above epsilon");
  } else {
    const double eps_p = trace_num(H, "eps_p");
    const double eps_d = trace_num(H, "eps_d");
    const double delta = trace_num(H, "delta");
    const double thresh = eps_p - std::pow(eps_p, power);
    const std::string status = trace_str(C, "status");
    const double c_norm = trace_num(C, "c_norm");
    if (status == "ScaledKKT") {
      const double f_value = trace_num(C, "f_value");
      const double t_eps = trace_num(C, "t_eps");
      const double chi_mu = trace_num(C, "chi_mu");
      const double chi_lambda = trace_num(C, "chi_lambda");
      const double y_scale = trace_num(C, "y_scale");
      const ojson& y = trace_field(C, "y_eps");
      double y_sq = 0.0;
      for (const auto& v : y) y_sq += v.get<double>() * v.get<double>();
      audit.require("certificate",
                    std::abs(y_scale - std::sqrt(y_sq + 1.0)) <= 1e-12,
                    "y_scale disagrees with |(y,1)|");
      audit.require("certificate",
                    std::abs(chi_lambda * (f_value - t_eps) - chi_mu) <=
                        1e-12 * std::max(1.0, std::abs(chi_mu)),
                    "chi_lambda breaks merit-gradient homogeneity");
      audit.require("certificate", f_value >= t_eps - 1e-12,
                    "certified objective below its target");
      audit.require("certificate", c_norm <= eps_p + 1e-9,
                    "certified violation above eps_p");
      audit.require("certificate", chi_mu <= eps_p * eps_d + 1e-9,
                    "certified merit criticality above eps_p eps_d");
    } else {
      const double chi_feas = trace_num(C, "chi_feasibility");
      if (trace_field(C, "t_eps").is_null())
        audit.require("certificate",
                      c_norm > thresh - 1e-12 &&
                          chi_feas <= eps_d * c_norm + 1e-9,
                      "infeasible certificate outside the phase-1 envelope");
      else
        audit.require("certificate",
                      c_norm >= eps_p / delta - 1e-12 &&
                          chi_feas <= delta * eps_d * c_norm + 1e-9,
                      "infeasible certificate outside the rescue envelope");
    }
  }
  return rep;
}

inline ReplayReport replay_check(std::istream& in) {
  return replay_check(read_trace(in));
}

}  // namespace arp
