#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace arp {

namespace detail {

// Number of non-decreasing m-tuples over an alphabet of size a: C(a+m-1, m).
inline std::size_t tuple_count(int alphabet, int m) {
  if (alphabet <= 0) return m == 0 ? 1 : 0;
  std::size_t num = 1, den = 1;
  for (int i = 0; i < m; ++i) {
    num *= static_cast<std::size_t>(alphabet + m - 1 - i);
    den *= static_cast<std::size_t>(i + 1);
  }
  return num / den;
}

// Visits all non-decreasing `order`-tuples over {0..dim-1} in lexicographic
// order. fn receives a span over the current tuple.
template <typename Fn>
void for_each_canonical(int order, int dim, Fn&& fn) {
  std::array<int, 3> idx{};
  if (order == 0) {
    fn(std::span<const int>{});
    return;
  }
  for (;;) {
    fn(std::span<const int>(idx.data(), static_cast<std::size_t>(order)));
    int a = order - 1;
    while (a >= 0 && idx[static_cast<std::size_t>(a)] == dim - 1) --a;
    if (a < 0) break;
    ++idx[static_cast<std::size_t>(a)];
    for (int b = a + 1; b < order; ++b)
      idx[static_cast<std::size_t>(b)] = idx[static_cast<std::size_t>(a)];
  }
}

}  // namespace detail

// Position of a sorted multi-index in the lexicographic enumeration of
// non-decreasing tuples over {0..dim-1}.
inline std::size_t canonical_rank(std::span<const int> sorted_idx, int dim) {
  const int order = static_cast<int>(sorted_idx.size());
  std::size_t rank = 0;
  int prev = 0;
  for (int a = 0; a < order; ++a) {
    const int i = sorted_idx[static_cast<std::size_t>(a)];
    for (int v = prev; v < i; ++v)
      rank += detail::tuple_count(dim - v, order - a - 1);
    prev = i;
  }
  return rank;
}

// Number of distinct orderings of a sorted multi-index: order! / prod(mult!).
inline double multinomial_weight(std::span<const int> sorted_idx) {
  static constexpr std::array<double, 4> fact{1.0, 1.0, 2.0, 6.0};
  const int order = static_cast<int>(sorted_idx.size());
  double w = fact[static_cast<std::size_t>(order)];
  int run = 1;
  for (int a = 1; a < order; ++a) {
    if (sorted_idx[static_cast<std::size_t>(a)] ==
        sorted_idx[static_cast<std::size_t>(a - 1)]) {
      ++run;
      w /= run;
    } else {
      run = 1;
    }
  }
  return w;
}

// Symmetric tensor of order 0..3 over R^dim. Stores one coefficient per
// non-decreasing multi-index; all permutations of an index alias that entry.
class SymTensor {
 public:
  static constexpr int kMaxOrder = 3;

  SymTensor() = default;

  SymTensor(int order, int dim) : order_(order), dim_(dim) {
    if (order < 0 || order > kMaxOrder)
      throw std::invalid_argument("SymTensor: order must be in [0, 3]");
    if (dim <= 0) throw std::invalid_argument("SymTensor: dim must be positive");
    coef_.assign(entry_count(order, dim), 0.0);
  }

  static std::size_t entry_count(int order, int dim) {
    return detail::tuple_count(dim, order);
  }

  int order() const { return order_; }
  int dim() const { return dim_; }
  std::size_t entry_count() const { return coef_.size(); }

  double coeff(std::span<const int> idx) const {
    return coef_[rank_checked(idx)];
  }
  double coeff(std::initializer_list<int> idx) const {
    return coeff(std::span<const int>(idx.begin(), idx.size()));
  }
  void set_coeff(std::span<const int> idx, double v) {
    coef_[rank_checked(idx)] = v;
  }
  void set_coeff(std::initializer_list<int> idx, double v) {
    set_coeff(std::span<const int>(idx.begin(), idx.size()), v);
  }
  void add_coeff(std::span<const int> idx, double v) {
    coef_[rank_checked(idx)] += v;
  }
  void add_coeff(std::initializer_list<int> idx, double v) {
    add_coeff(std::span<const int>(idx.begin(), idx.size()), v);
  }

  // Raw access in canonical enumeration order.
  double entry_at(std::size_t flat) const { return coef_[flat]; }
  double& entry_at(std::size_t flat) { return coef_[flat]; }

  void add_scaled(const SymTensor& other, double s) {
    if (other.order_ != order_ || other.dim_ != dim_)
      throw std::invalid_argument("SymTensor::add_scaled: shape mismatch");
    for (std::size_t i = 0; i < coef_.size(); ++i) coef_[i] += s * other.coef_[i];
  }

  double max_abs() const {
    double m = 0.0;
    for (double c : coef_) m = std::max(m, std::abs(c));
    return m;
  }

  bool all_finite() const {
    for (double c : coef_)
      if (!std::isfinite(c)) return false;
    return true;
  }

  double scalar() const {
    require_order(0, "scalar");
    return coef_[0];
  }

  Eigen::VectorXd to_vector() const {
    require_order(1, "to_vector");
    return Eigen::Map<const Eigen::VectorXd>(coef_.data(), dim_);
  }

  Eigen::MatrixXd to_matrix() const {
    require_order(2, "to_matrix");
    Eigen::MatrixXd m(dim_, dim_);
    for (int i = 0; i < dim_; ++i)
      for (int j = i; j < dim_; ++j) {
        const std::array<int, 2> idx{i, j};
        m(i, j) = m(j, i) = coeff(std::span<const int>(idx));
      }
    return m;
  }

  static SymTensor from_scalar(double v) {
    SymTensor t(0, 1);
    t.coef_[0] = v;
    return t;
  }

  static SymTensor from_vector(const Eigen::VectorXd& v) {
    SymTensor t(1, static_cast<int>(v.size()));
    for (int i = 0; i < t.dim_; ++i) t.coef_[static_cast<std::size_t>(i)] = v[i];
    return t;
  }

  // Reads the upper triangle of a symmetric matrix.
  static SymTensor from_matrix(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols())
      throw std::invalid_argument("SymTensor::from_matrix: matrix must be square");
    SymTensor t(2, static_cast<int>(m.rows()));
    for (int i = 0; i < t.dim_; ++i)
      for (int j = i; j < t.dim_; ++j) {
        const std::array<int, 2> idx{i, j};
        t.set_coeff(std::span<const int>(idx), m(i, j));
      }
    return t;
  }

 private:
  void require_order(int o, const char* what) const {
    if (order_ != o)
      throw std::invalid_argument(std::string("SymTensor::") + what +
                                  ": wrong order");
  }

  std::size_t rank_checked(std::span<const int> idx) const {
    if (static_cast<int>(idx.size()) != order_)
      throw std::invalid_argument("SymTensor: index order mismatch");
    std::array<int, 3> buf{};
    for (std::size_t a = 0; a < idx.size(); ++a) {
      if (idx[a] < 0 || idx[a] >= dim_)
        throw std::out_of_range("SymTensor: index out of range");
      buf[a] = idx[a];
    }
    std::sort(buf.begin(), buf.begin() + order_);
    return canonical_rank(std::span<const int>(buf.data(),
                                               static_cast<std::size_t>(order_)),
                          dim_);
  }

  int order_ = 0;
  int dim_ = 1;
  std::vector<double> coef_{0.0};
};

// Contracts the last k slots of t against s, summing over all k-tuples with
// multinomial weights: out[J] = sum_I w(I) t[J,I] prod_i s[i].
inline SymTensor contract(const SymTensor& t, const Eigen::VectorXd& s, int k) {
  if (k < 0 || k > t.order())
    throw std::invalid_argument("contract: k must be in [0, order]");
  if (static_cast<int>(s.size()) != t.dim())
    throw std::invalid_argument("contract: vector dimension mismatch");
  const int n = t.dim();
  const int r = t.order() - k;
  SymTensor out(r, n);
  std::size_t flat_out = 0;
  detail::for_each_canonical(r, n, [&](std::span<const int> J) {
    double acc = 0.0;
    detail::for_each_canonical(k, n, [&](std::span<const int> I) {
      double prod = 1.0;
      for (int i : I) prod *= s[i];
      std::array<int, 3> full{};
      std::merge(J.begin(), J.end(), I.begin(), I.end(), full.begin());
      acc += multinomial_weight(I) * prod *
             t.coeff(std::span<const int>(full.data(),
                                          static_cast<std::size_t>(t.order())));
    });
    out.entry_at(flat_out++) = acc;
  });
  return out;
}

// scale * a^(outer order): entry(idx) = scale * prod a[idx].
inline SymTensor sym_outer_power(const Eigen::VectorXd& a, int order,
                                 double scale) {
  SymTensor t(order, static_cast<int>(a.size()));
  std::size_t flat = 0;
  detail::for_each_canonical(order, t.dim(), [&](std::span<const int> idx) {
    double prod = scale;
    for (int i : idx) prod *= a[i];
    t.entry_at(flat++) = prod;
  });
  return t;
}

// Value and derivative tensors of a smooth function at a point: derivs[q-1]
// holds the order-q derivative, q = 1..degree.
struct TaylorData {
  double value = 0.0;
  std::vector<SymTensor> derivs;

  int degree() const { return static_cast<int>(derivs.size()); }
  int dim() const {
    return derivs.empty() ? 0 : derivs.front().dim();
  }

  void validate() const {
    if (derivs.empty() || derivs.size() > SymTensor::kMaxOrder)
      throw std::invalid_argument("TaylorData: degree must be in [1, 3]");
    for (std::size_t q = 0; q < derivs.size(); ++q) {
      if (derivs[q].order() != static_cast<int>(q) + 1)
        throw std::invalid_argument("TaylorData: derivative order mismatch");
      if (derivs[q].dim() != derivs.front().dim())
        throw std::invalid_argument("TaylorData: derivative dimension mismatch");
    }
  }

  Eigen::VectorXd gradient() const { return derivs.at(0).to_vector(); }
};

// T(s) = value + sum_q (1/q!) D_q · s^q.
inline double taylor_value(const TaylorData& t, const Eigen::VectorXd& s) {
  static constexpr std::array<double, 4> inv_fact{1.0, 1.0, 0.5, 1.0 / 6.0};
  double v = t.value;
  for (int q = 1; q <= t.degree(); ++q)
    v += inv_fact[static_cast<std::size_t>(q)] *
         contract(t.derivs[static_cast<std::size_t>(q - 1)], s, q).scalar();
  return v;
}

// grad T(s) = sum_q (1/(q-1)!) D_q · s^(q-1).
inline Eigen::VectorXd taylor_gradient(const TaylorData& t,
                                       const Eigen::VectorXd& s) {
  static constexpr std::array<double, 4> inv_fact{1.0, 1.0, 1.0, 0.5};
  Eigen::VectorXd g = t.derivs.at(0).to_vector();
  for (int q = 2; q <= t.degree(); ++q)
    g += inv_fact[static_cast<std::size_t>(q)] *
         contract(t.derivs[static_cast<std::size_t>(q - 1)], s, q - 1)
             .to_vector();
  return g;
}

}  // namespace arp
