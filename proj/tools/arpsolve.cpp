#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <arp/registry.hpp>
#include <arp/replay.hpp>
#include <arp/sweep.hpp>
#include <arp/trace.hpp>

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct CommonFlags {
  std::string problem;
  int p = 2;
  double sigma0 = 1.0;
  double theta = 100.0;
  long max_iters = 1000000;
  double gamma1 = 0.5, gamma2 = 2.0, gamma3 = 4.0;
  double eta1 = 0.01, eta2 = 0.9;
  std::string trace_out;
  std::optional<unsigned> seed;
};

// Reads a key=value config file and appends the pairs as flags, except for
// keys the command line already sets: explicit flags win.
std::vector<std::string> expand_config_args(std::vector<std::string> args) {
  std::string path;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size())
      path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw CLI::FileError("could not open config file '" + path + "'");

  const auto trim = [](std::string s) {
    const char* ws = " \t\r";
    const auto a = s.find_first_not_of(ws);
    if (a == std::string::npos) return std::string();
    return s.substr(a, s.find_last_not_of(ws) - a + 1);
  };
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw CLI::FileError(path + ":" + std::to_string(line_no) +
                           ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (val.size() >= 2 && ((val.front() == '"' && val.back() == '"') ||
                            (val.front() == '\'' && val.back() == '\'')))
      val = val.substr(1, val.size() - 2);
    const std::string flag = "--" + key;
    bool overridden = false;
    for (const auto& a : args)
      if (a == flag || a.rfind(flag + "=", 0) == 0) overridden = true;
    if (!overridden) args.push_back(flag + "=" + val);
  }
  return args;
}

void add_common(CLI::App* cmd, CommonFlags& f, bool need_problem = true) {
  static std::string config_path;  // consumed by expand_config_args
  cmd->add_option("--config", config_path,
                  "key=value file mirroring the flags; explicit flags win");
  auto* prob = cmd->add_option("--problem", f.problem, "registry problem name");
  if (need_problem) prob->required();
  cmd->add_option("--p", f.p, "Taylor model degree (1, 2, or 3)")
      ->check(CLI::Range(1, 3));
  cmd->add_option("--sigma0", f.sigma0, "initial regularization weight");
  cmd->add_option("--theta", f.theta, "subproblem criticality slack factor");
  cmd->add_option("--max-iters", f.max_iters, "iteration budget per minimization");
  cmd->add_option("--gamma1", f.gamma1, "sigma shrink factor, in (0,1)");
  cmd->add_option("--gamma2", f.gamma2, "sigma growth factor, > 1");
  cmd->add_option("--gamma3", f.gamma3, "sigma ceiling factor, >= gamma2");
  cmd->add_option("--eta1", f.eta1, "acceptance threshold for rho");
  cmd->add_option("--eta2", f.eta2, "very-successful threshold for rho");
  cmd->add_option("--trace-out", f.trace_out, "write a JSON Lines trace here");
  cmd->add_option("--seed", f.seed,
                  "randomize the start point inside the feasible set");
}

arp::ArpccConfig inner_config(const CommonFlags& f) {
  arp::ArpccConfig cfg;
  cfg.p = f.p;
  cfg.sigma0 = f.sigma0;
  cfg.subsolver.theta = f.theta;
  cfg.max_outer_iters = f.max_iters;
  cfg.gamma1 = f.gamma1;
  cfg.gamma2 = f.gamma2;
  cfg.gamma3 = f.gamma3;
  cfg.eta1 = f.eta1;
  cfg.eta2 = f.eta2;
  return cfg;
}

Eigen::VectorXd start_point(const arp::Problem& P,
                            const std::optional<unsigned>& seed) {
  if (!seed) return P.default_start;
  std::mt19937_64 rng(*seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd x(P.dim());
  const auto& F = P.feasible;
  for (int i = 0; i < x.size(); ++i) {
    if (F.is_whole_space())
      x[i] = P.default_start[i] + 2.0 * unit(rng) - 1.0;
    else
      x[i] = F.lower()[i] + unit(rng) * (F.upper()[i] - F.lower()[i]);
  }
  return x;
}

std::string format_vector(const Eigen::VectorXd& v) {
  std::ostringstream out;
  out << "(";
  for (int i = 0; i < v.size(); ++i) {
    if (i) out << ", ";
    out << v(i);
  }
  out << ")";
  return out.str();
}

void write_trace_file(const std::string& path,
                      const std::function<void(std::ostream&)>& emit) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw arp::SolverError("cannot open trace file '" + path + "'");
  emit(out);
  std::printf("trace written to %s\n", path.c_str());
}

void print_counters(const arp::EvalCounters& c) {
  std::printf("evaluations: f %ld (+%ld derivative sets), c %ld (+%ld derivative sets)\n",
              c.f_values, c.f_derivative_sets, c.c_values, c.c_derivative_sets);
}

int cmd_solve_convex(const CommonFlags& f, double eps) {
  const arp::Problem& base = arp::find_problem(f.problem);
  if (base.num_constraints() > 0)
    throw CLI::ValidationError("--problem", "problem '" + f.problem +
                                                "' has equality constraints; "
                                                "use solve-general");
  arp::Problem P = base;
  P.default_start = start_point(base, f.seed);
  arp::ArpccConfig cfg = inner_config(f);
  cfg.epsilon = eps;
  cfg.validate();

  arp::EvalCounters counters;
  arp::CountedFunction h(*P.objective, counters);
  arp::ArpccResult res =
      arp::arpcc_minimize(h, P.feasible, cfg, P.default_start, counters);

  std::printf("status: %s\n", arp::to_string(res.status));
  std::printf("x_eps: %s\n", format_vector(res.x_eps).c_str());
  std::printf("f(x_eps) = %.10g, chi = %.6g (target %.6g)\n", res.value_eps,
              res.chi_eps, eps);
  std::printf("iterations: %ld successful of %ld total, sigma_max %.6g\n",
              res.successful_iterations, res.total_iterations,
              res.sigma_max_observed);
  print_counters(counters);
  write_trace_file(f.trace_out, [&](std::ostream& out) {
    arp::write_arpcc_trace(out, P, cfg, res);
  });
  return res.status == arp::ArpccStatus::CriticalityReached ? 0 : kExitFailure;
}

int cmd_solve_general(const CommonFlags& f, double eps_p, double eps_d,
                      double delta, double beta) {
  const arp::Problem& base = arp::find_problem(f.problem);
  arp::Problem P = base;
  P.default_start = start_point(base, f.seed);
  arp::ArpgcConfig cfg;
  cfg.inner = inner_config(f);
  cfg.eps_p = eps_p;
  cfg.eps_d = eps_d;
  cfg.delta = delta;
  cfg.beta = beta;
  cfg.validate();

  arp::ArpgcResult res = arp::arpgc_solve(P, cfg);
  const arp::Certificate& cert = res.certificate;

  std::printf("status: %s\n", arp::to_string(cert.status));
  std::printf("x_eps: %s\n", format_vector(cert.x_eps).c_str());
  if (cert.status == arp::CertificateStatus::ScaledKKT) {
    std::printf("f = %.10g, |c| = %.6g, t_eps = %.10g\n", cert.f_value,
                cert.c_norm, *cert.t_eps);
    std::printf("multipliers y = %s, |(y,1)| = %.6g\n",
                format_vector(*cert.y_eps).c_str(), cert.y_scale);
    std::printf("chi(Lagrangian) = %.6g <= delta eps_d |(y,1)| = %.6g\n",
                cert.chi_lambda, delta * eps_d * cert.y_scale);
  } else {
    std::printf("|c| = %.6g, chi(|c|^2/2) = %.6g (eps_d |c| = %.6g)\n",
                cert.c_norm, cert.chi_feasibility, eps_d * cert.c_norm);
  }
  std::printf("phase 1: %ld iterations, feasible: %s; targets: %zu\n",
              res.phase1.total_iterations, res.phase1_feasible ? "yes" : "no",
              res.targets.size());
  print_counters(res.counters);

  std::string why;
  const bool ok = arp::verify_certificate(P, cert, cfg, &why);
  std::printf("certificate verification: %s\n", ok ? "ok" : why.c_str());
  write_trace_file(f.trace_out, [&](std::ostream& out) {
    arp::write_arpgc_trace(out, P, cfg, res);
  });
  return ok ? 0 : kExitFailure;
}

int cmd_check_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::fprintf(stderr, "cannot open trace file '%s'\n", path.c_str());
    return kExitUsage;
  }
  arp::ReplayReport rep;
  try {
    rep = arp::replay_check(in);
  } catch (const arp::SolverError& e) {
    std::fprintf(stderr, "malformed trace: %s\n", e.what());
    return kExitUsage;
  }
  for (const auto& w : rep.warnings) std::printf("warning: %s\n", w.c_str());
  for (const auto& inv : rep.invariants) {
    if (inv.passed()) {
      std::printf("pass %-20s (%ld checks)\n", inv.name.c_str(), inv.checked);
    } else {
      std::printf("FAIL %-20s (%ld of %ld checks)\n", inv.name.c_str(),
                  inv.violations, inv.checked);
      for (const auto& msg : inv.messages)
        std::printf("     %s\n", msg.c_str());
    }
  }
  std::printf("%ld records, %s\n", rep.records,
              rep.passed() ? "all invariants hold" : "invariant violations");
  return rep.passed() ? 0 : kExitFailure;
}

int cmd_sweep(const CommonFlags& f, const std::vector<double>& grid) {
  const arp::Problem& P = arp::find_problem(f.problem);
  if (P.num_constraints() > 0)
    throw CLI::ValidationError("--problem",
                               "sweep runs the convex solver; problem '" +
                                   f.problem + "' has equality constraints");
  arp::ArpccConfig base = inner_config(f);
  base.validate();
  arp::SweepResult sw = arp::run_sweep(P, base, grid);

  std::printf("%-12s %-12s %-10s %-10s %-10s\n", "eps", "successful", "total",
              "f_values", "deriv_sets");
  for (const auto& pt : sw.points)
    std::printf("%-12.3g %-12ld %-10ld %-10ld %-10ld\n", pt.eps,
                pt.successful_iterations, pt.total_iterations, pt.f_values,
                pt.derivative_sets);
  std::printf("log-log slope %.4f, worst-case bound %.4f: %s\n", sw.slope,
              sw.slope_bound(), sw.within_bound() ? "within" : "EXCEEDED");
  return sw.within_bound() ? 0 : kExitFailure;
}

int cmd_list_problems() {
  std::printf("%-18s %-4s %-12s %-12s %-12s %s\n", "name", "dim",
              "constraints", "f_low", "f_up", "start");
  for (const arp::Problem& p : arp::problem_registry()) {
    std::string fup = p.f_up ? std::to_string(*p.f_up) : "unknown";
    std::printf("%-18s %-4d %-12d %-12g %-12s %s\n", p.name.c_str(), p.dim(),
                p.num_constraints(), p.f_low, fup.c_str(),
                format_vector(p.default_start).c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Adaptive-regularization solvers with verifiable certificates and "
      "replayable traces"};
  app.require_subcommand(1);

  CommonFlags convex_flags;
  double eps = 1e-4;
  auto* convex = app.add_subcommand(
      "solve-convex", "minimize a registry objective over its feasible set");
  add_common(convex, convex_flags);
  convex->add_option("--eps", eps, "first-order criticality tolerance");

  CommonFlags general_flags;
  double eps_p = 1e-3, eps_d = 1e-3, delta = 2.0, beta = 1.0;
  auto* general = app.add_subcommand(
      "solve-general", "two-phase solve of an equality-constrained problem");
  add_common(general, general_flags);
  general->add_option("--eps-p", eps_p, "primal (feasibility) tolerance");
  general->add_option("--eps-d", eps_d, "dual (criticality) tolerance");
  general->add_option("--delta", delta, "certificate scaling margin, > 1");
  general->add_option("--beta", beta, "cap on eps_p");

  std::string trace_path;
  auto* check = app.add_subcommand(
      "check-trace", "replay a trace file and re-validate its invariants");
  check->add_option("trace", trace_path, "JSON Lines trace file")->required();

  CommonFlags sweep_flags;
  std::vector<double> grid{1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  auto* sweep = app.add_subcommand(
      "sweep", "fit the work-versus-accuracy exponent over an eps grid");
  add_common(sweep, sweep_flags);
  sweep->add_option("--eps-grid", grid,
                    "strictly decreasing tolerances, >= 4 spanning >= 2 decades")
      ->delimiter(',');

  auto* list = app.add_subcommand("list-problems", "show the problem registry");

  try {
    std::vector<std::string> args =
        expand_config_args({argv + 1, argv + argc});
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (convex->parsed()) return cmd_solve_convex(convex_flags, eps);
    if (general->parsed())
      return cmd_solve_general(general_flags, eps_p, eps_d, delta, beta);
    if (check->parsed()) return cmd_check_trace(trace_path);
    if (sweep->parsed()) return cmd_sweep(sweep_flags, grid);
    if (list->parsed()) return cmd_list_problems();
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid parameters: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}
