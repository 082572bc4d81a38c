#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <utility>

#include "arp/tensor.hpp"

namespace arp {

// Regularized local model at x_k: m(s) = T(s) + (sigma/(p+1)) |s|^(p+1),
// where T is the degree-p Taylor polynomial and |.| is Euclidean.
struct ModelState {
  Eigen::VectorXd x;   // base point x_k
  TaylorData taylor;   // objective data at x_k
  double sigma = 1.0;
  int p = 2;
};

inline ModelState build_model(Eigen::VectorXd x, TaylorData taylor,
                              double sigma) {
  taylor.validate();
  if (!(sigma > 0.0))
    throw std::invalid_argument("build_model: sigma must be positive");
  if (taylor.dim() != x.size())
    throw std::invalid_argument("build_model: dimension mismatch");
  ModelState m;
  m.p = taylor.degree();
  m.x = std::move(x);
  m.taylor = std::move(taylor);
  m.sigma = sigma;
  return m;
}

inline double model_value(const ModelState& M, const Eigen::VectorXd& s) {
  return taylor_value(M.taylor, s) +
         M.sigma / (M.p + 1) * std::pow(s.norm(), M.p + 1);
}

// For p = 1 the regularizer gradient sigma |s|^0 s is continuous at 0.
inline Eigen::VectorXd model_gradient(const ModelState& M,
                                      const Eigen::VectorXd& s) {
  return taylor_gradient(M.taylor, s) +
         M.sigma * std::pow(s.norm(), M.p - 1) * s;
}

// T(0) - T(s): the Taylor-only decrease, denominator of the acceptance ratio.
inline double model_decrease(const ModelState& M, const Eigen::VectorXd& s) {
  return M.taylor.value - taylor_value(M.taylor, s);
}

}  // namespace arp
