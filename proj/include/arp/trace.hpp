#pragma once

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "arp/arpcc.hpp"
#include "arp/arpgc.hpp"
#include "arp/errors.hpp"

namespace arp {

using ojson = nlohmann::ordered_json;

// A trace is JSON Lines: one record per line, an envelope of
// record kind / run segment / sequence index plus flat payload keys.
struct TraceRecord {
  std::string record;  // run-header | arpcc-iter | arpgc-target | certificate
  std::string run;     // segment id within the file
  long index = 0;      // sequence number within the segment
  ojson payload;
};

namespace detail {

inline void dump_number(std::string& out, double v) {
  if (!std::isfinite(v)) {
    out += "null";
    return;
  }
  if (v == 0.0 && std::signbit(v)) {
    out += "-0.0";
    return;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

// Serializer pinning floats to 17 significant digits (lossless round-trip)
// and non-finite values to null.
inline void dump_json(std::string& out, const ojson& j) {
  switch (j.type()) {
    case ojson::value_t::object: {
      out += '{';
      bool first = true;
      for (const auto& [key, val] : j.items()) {
        if (!first) out += ',';
        first = false;
        out += ojson(key).dump();
        out += ':';
        dump_json(out, val);
      }
      out += '}';
      return;
    }
    case ojson::value_t::array: {
      out += '[';
      for (size_t i = 0; i < j.size(); ++i) {
        if (i) out += ',';
        dump_json(out, j[i]);
      }
      out += ']';
      return;
    }
    case ojson::value_t::number_float:
      dump_number(out, j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

}  // namespace detail

inline std::string dump_trace_line(const TraceRecord& rec) {
  ojson envelope;
  envelope["record"] = rec.record;
  envelope["run"] = rec.run;
  envelope["index"] = rec.index;
  for (const auto& [key, val] : rec.payload.items()) envelope[key] = val;
  std::string line;
  detail::dump_json(line, envelope);
  return line;
}

inline std::vector<TraceRecord> read_trace(std::istream& in) {
  std::vector<TraceRecord> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ojson j = ojson::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("record") ||
        !j.contains("run") || !j.contains("index") ||
        !j["record"].is_string() || !j["run"].is_string() ||
        !j["index"].is_number_integer())
      throw SolverError("read_trace: malformed record at line " +
                        std::to_string(line_no));
    TraceRecord rec;
    rec.record = j["record"].get<std::string>();
    rec.run = j["run"].get<std::string>();
    rec.index = j["index"].get<long>();
    j.erase("record");
    j.erase("run");
    j.erase("index");
    rec.payload = std::move(j);
    out.push_back(std::move(rec));
  }
  return out;
}

// Payload readers; absent keys are an error, null numbers read as NaN.
inline const ojson& trace_field(const ojson& payload, const char* key) {
  auto it = payload.find(key);
  if (it == payload.end())
    throw SolverError(std::string("trace payload is missing key '") + key +
                      "'");
  return *it;
}

inline double trace_num(const ojson& payload, const char* key) {
  const ojson& v = trace_field(payload, key);
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!v.is_number())
    throw SolverError(std::string("trace key '") + key + "' is not numeric");
  return v.get<double>();
}

inline long trace_int(const ojson& payload, const char* key) {
  const ojson& v = trace_field(payload, key);
  if (!v.is_number_integer())
    throw SolverError(std::string("trace key '") + key + "' is not an integer");
  return v.get<long>();
}

inline bool trace_bool(const ojson& payload, const char* key) {
  const ojson& v = trace_field(payload, key);
  if (!v.is_boolean())
    throw SolverError(std::string("trace key '") + key + "' is not a boolean");
  return v.get<bool>();
}

inline std::string trace_str(const ojson& payload, const char* key) {
  const ojson& v = trace_field(payload, key);
  if (!v.is_string())
    throw SolverError(std::string("trace key '") + key + "' is not a string");
  return v.get<std::string>();
}

inline EvalCounters trace_counters(const ojson& payload) {
  const ojson& c = trace_field(payload, "counters");
  EvalCounters out;
  out.f_values = trace_int(c, "f_values");
  out.f_derivative_sets = trace_int(c, "f_derivative_sets");
  out.c_values = trace_int(c, "c_values");
  out.c_derivative_sets = trace_int(c, "c_derivative_sets");
  return out;
}

inline ojson to_trace(const EvalCounters& c) {
  ojson j;
  j["f_values"] = c.f_values;
  j["f_derivative_sets"] = c.f_derivative_sets;
  j["c_values"] = c.c_values;
  j["c_derivative_sets"] = c.c_derivative_sets;
  return j;
}

inline ojson to_trace(const Eigen::VectorXd& v) {
  ojson arr = ojson::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline ojson to_trace(const IterationRecord& r) {
  ojson j;
  j["k"] = r.k;
  j["x"] = to_trace(r.x);
  j["sigma"] = r.sigma;
  j["chi"] = r.chi;
  j["step_norm"] = r.step_norm;
  j["rho"] = r.rho;
  j["outcome"] = to_string(r.outcome);
  j["f_current"] = r.f_current;
  j["f_trial"] = r.f_trial;
  j["model_decrease"] = r.model_decrease;
  j["chi_model_trial"] = r.chi_model_trial;
  j["sub3_bound"] = r.sub3_bound;
  j["trial_feasible"] = r.trial_feasible;
  j["sigma_next"] = r.sigma_next;
  j["counters"] = to_trace(r.counters);
  return j;
}

inline ojson to_trace(const TargetRecord& r) {
  ojson j;
  j["k"] = r.k;
  j["t"] = r.t;
  j["kind"] = to_string(r.kind);
  j["x"] = to_trace(r.x);
  j["r_norm"] = r.r_norm;
  j["c_norm"] = r.c_norm;
  j["f_value"] = r.f_value;
  j["chi_mu"] = r.chi_mu;
  j["t_next"] = r.t_next;
  j["r_norm_next"] = r.r_norm_next;
  j["chi_mu_next"] = r.chi_mu_next;
  j["inner_iterations"] = r.inner_iterations;
  j["inner_successful"] = r.inner_successful;
  j["counters"] = to_trace(r.counters);
  return j;
}

inline ojson to_trace(const Certificate& c) {
  ojson j;
  j["status"] = to_string(c.status);
  j["x_eps"] = to_trace(c.x_eps);
  if (c.t_eps)
    j["t_eps"] = *c.t_eps;
  else
    j["t_eps"] = nullptr;
  if (c.y_eps)
    j["y_eps"] = to_trace(*c.y_eps);
  else
    j["y_eps"] = nullptr;
  j["f_value"] = c.f_value;
  j["c_norm"] = c.c_norm;
  j["chi_feasibility"] = c.chi_feasibility;
  j["chi_mu"] = c.chi_mu;
  j["chi_lambda"] = c.chi_lambda;
  j["y_scale"] = c.y_scale;
  return j;
}

class TraceWriter {
 public:
  explicit TraceWriter(std::ostream& out) : out_(out) {}

  void write(const std::string& record, const std::string& run, long index,
             ojson payload) {
    TraceRecord rec{record, run, index, std::move(payload)};
    out_ << dump_trace_line(rec) << '\n';
  }

 private:
  std::ostream& out_;
};

namespace detail {

inline ojson arpcc_config_fields(const ArpccConfig& cfg) {
  ojson j;
  j["p"] = cfg.p;
  j["sigma0"] = cfg.sigma0;
  j["sigma_min"] = cfg.sigma_min;
  j["gamma1"] = cfg.gamma1;
  j["gamma2"] = cfg.gamma2;
  j["gamma3"] = cfg.gamma3;
  j["eta1"] = cfg.eta1;
  j["eta2"] = cfg.eta2;
  j["epsilon"] = cfg.epsilon;
  j["theta"] = cfg.subsolver.theta;
  return j;
}

inline void problem_fields(ojson& j, const Problem& P, int p) {
  j["problem"] = P.name;
  j["dim"] = P.dim();
  j["f_low"] = P.f_low;
  if (P.f_up)
    j["f_up"] = *P.f_up;
  else
    j["f_up"] = nullptr;
  const auto L = P.lipschitz_p(p);
  if (L)
    j["lipschitz"] = *L;
  else
    j["lipschitz"] = nullptr;
}

}  // namespace detail

inline ojson arpcc_header(const Problem& P, const ArpccConfig& cfg,
                          bool custom_stop = false) {
  ojson j;
  j["algorithm"] = "arpcc";
  detail::problem_fields(j, P, cfg.p);
  ojson fields = detail::arpcc_config_fields(cfg);
  for (const auto& [key, val] : fields.items()) j[key] = val;
  j["custom_stop"] = custom_stop;
  return j;
}

inline ojson arpgc_header(const Problem& P, const ArpgcConfig& cfg) {
  ojson j;
  j["algorithm"] = "arpgc";
  detail::problem_fields(j, P, cfg.inner.p);
  j["eps_p"] = cfg.eps_p;
  j["eps_d"] = cfg.eps_d;
  j["delta"] = cfg.delta;
  j["beta"] = cfg.beta;
  ojson fields = detail::arpcc_config_fields(cfg.inner);
  for (const auto& [key, val] : fields.items()) j[key] = val;
  j["custom_stop"] = true;  // phase predicates replace the epsilon test
  return j;
}

// Full-file emitters: run-header, per-iteration records, final certificate.
inline void write_arpcc_trace(std::ostream& out, const Problem& P,
                              const ArpccConfig& cfg, const ArpccResult& res) {
  TraceWriter w(out);
  w.write("run-header", "main", 0, arpcc_header(P, cfg));
  long i = 0;
  for (const auto& rec : res.trace) w.write("arpcc-iter", "main", i++, to_trace(rec));
  ojson cert;
  cert["status"] = to_string(res.status);
  cert["x_eps"] = to_trace(res.x_eps);
  cert["value_eps"] = res.value_eps;
  cert["chi_eps"] = res.chi_eps;
  cert["successful_iterations"] = res.successful_iterations;
  cert["total_iterations"] = res.total_iterations;
  cert["sigma_max_observed"] = res.sigma_max_observed;
  cert["counters"] = to_trace(res.counters);
  w.write("certificate", "main", i, cert);
}

inline void write_arpgc_trace(std::ostream& out, const Problem& P,
                              const ArpgcConfig& cfg, const ArpgcResult& res) {
  TraceWriter w(out);
  w.write("run-header", "main", 0, arpgc_header(P, cfg));
  long i = 0;
  for (const auto& rec : res.phase1.trace)
    w.write("arpcc-iter", "phase1", i++, to_trace(rec));
  for (size_t t = 0; t < res.targets.size(); ++t) {
    const std::string seg = "target-" + std::to_string(res.targets[t].k);
    long j = 0;
    if (t < res.inner_runs.size())
      for (const auto& rec : res.inner_runs[t].trace)
        w.write("arpcc-iter", seg, j++, to_trace(rec));
    w.write("arpgc-target", "targets", static_cast<long>(t),
            to_trace(res.targets[t]));
  }
  ojson cert = to_trace(res.certificate);
  cert["phase1_feasible"] = res.phase1_feasible;
  cert["t1"] = res.t1;
  cert["counters"] = to_trace(res.counters);
  w.write("certificate", "main", 0, cert);
}

}  // namespace arp
