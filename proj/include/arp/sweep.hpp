#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "arp/arpcc.hpp"
#include "arp/oracle.hpp"

namespace arp {

struct SweepPoint {
  double eps = 0.0;
  long successful_iterations = 0;
  long total_iterations = 0;
  long f_values = 0;
  long derivative_sets = 0;
};

// Empirical work-versus-accuracy scaling; the fitted slope is compared
// against the (p+1)/p worst-case exponent of the iteration bound.
struct SweepResult {
  std::string problem;
  int p = 2;
  std::vector<SweepPoint> points;
  double slope = 0.0;

  double slope_bound() const { return (p + 1.0) / p + 0.1; }
  bool within_bound() const { return slope <= slope_bound(); }
};

inline void validate_sweep_grid(const std::vector<double>& grid) {
  if (grid.size() < 4)
    throw std::invalid_argument("sweep grid needs at least 4 points");
  for (double e : grid)
    if (!(e > 0.0))
      throw std::invalid_argument("sweep grid values must be positive");
  for (size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] < grid[i - 1]))
      throw std::invalid_argument("sweep grid must be strictly decreasing");
  if (!(grid.front() / grid.back() >= 100.0))
    throw std::invalid_argument("sweep grid must span at least two decades");
}

// Least-squares slope of log(count) against log(1/eps).
inline double fit_log_slope(const std::vector<double>& eps,
                            const std::vector<double>& counts) {
  if (eps.size() != counts.size() || eps.size() < 2)
    throw std::invalid_argument("fit_log_slope: need matching samples, >= 2");
  const double n = static_cast<double>(eps.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < eps.size(); ++i) {
    const double x = std::log(1.0 / eps[i]);
    const double y = std::log(std::max(1.0, counts[i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline SweepResult run_sweep(const Problem& P, const ArpccConfig& base,
                             const std::vector<double>& grid) {
  validate_sweep_grid(grid);
  SweepResult out;
  out.problem = P.name;
  out.p = base.p;
  std::vector<double> counts;
  for (double eps : grid) {
    ArpccConfig cfg = base;
    cfg.epsilon = eps;
    cfg.keep_trace = false;
    EvalCounters counters;
    CountedFunction h(*P.objective, counters);
    ArpccResult res =
        arpcc_minimize(h, P.feasible, cfg, P.default_start, counters);
    if (res.status != ArpccStatus::CriticalityReached)
      throw SolverError("sweep: solver failed at eps = " + std::to_string(eps));
    out.points.push_back({eps, res.successful_iterations,
                          res.total_iterations, counters.f_values,
                          counters.f_derivative_sets});
    counts.push_back(static_cast<double>(res.successful_iterations));
  }
  out.slope = fit_log_slope(grid, counts);
  return out;
}

}  // namespace arp
