#pragma once

#include "cip/quadrature.hpp"

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace cip {

/// Largest truncation order accepted.
inline constexpr int kMaxBasisOrder = 64;

/// Uniform time nodes t_l = l * dt, l = 0..count-1, covering [0, T].
template <typename Scalar>
class TimeGrid {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  TimeGrid(Scalar final_time, Eigen::Index count) : final_time_(final_time), count_(count) {
    if (count < 2) throw std::invalid_argument("TimeGrid: need at least 2 nodes");
    if (!(final_time > 0) || !std::isfinite(static_cast<double>(final_time)))
      throw std::invalid_argument("TimeGrid: final time must be positive");
  }

  Scalar final_time() const { return final_time_; }
  Eigen::Index size() const { return count_; }
  Scalar step() const { return final_time_ / Scalar(count_ - 1); }
  Scalar node(Eigen::Index l) const { return l == count_ - 1 ? final_time_ : step() * Scalar(l); }

  Vector nodes() const {
    Vector t(count_);
    for (Eigen::Index l = 0; l < count_; ++l) t(l) = node(l);
    return t;
  }

  bool operator==(const TimeGrid&) const = default;

 private:
  Scalar final_time_;
  Eigen::Index count_;
};

/// Samples phi_k(t) = (t - T/2)^(k-1) exp(t - T/2), k = 1..order, at `times`;
/// row k-1 holds phi_k.
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> build_raw_functions(
    Scalar final_time, int order, const Eigen::MatrixBase<Derived>& times) {
  if (order < 1) throw std::invalid_argument("build_raw_functions: order must be >= 1");
  if (order > kMaxBasisOrder)
    throw std::invalid_argument("build_raw_functions: order " + std::to_string(order) +
                                " exceeds the supported maximum of " +
                                std::to_string(kMaxBasisOrder));
  const Scalar half = final_time / 2;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> raw(order, times.size());
  for (Eigen::Index l = 0; l < times.size(); ++l) {
    const Scalar t = static_cast<Scalar>(times(l));
    Scalar value = std::exp(t - half);
    for (int k = 0; k < order; ++k) {
      raw(k, l) = value;
      value *= t - half;
    }
  }
  if (!raw.allFinite()) throw std::overflow_error("build_raw_functions: non-finite samples");
  return raw;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> build_raw_functions(
    Scalar final_time, int order, const TimeGrid<Scalar>& grid) {
  return build_raw_functions<Scalar>(final_time, order, grid.nodes());
}

/// Modified Gram-Schmidt with one reorthogonalization pass on sampled rows,
/// using the weighted inner product <f, g> = sum_q w_q f_q g_q.
///
/// Returns the lower-triangular matrix C with psi_n = sum_{k<=n} C(n,k) raw_k.
/// Throws if a row is numerically dependent on its predecessors.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> orthonormalize(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& raw,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& weights) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
  if (raw.cols() != weights.size())
    throw std::invalid_argument("orthonormalize: sample count differs from weight count");
  const Eigen::Index order = raw.rows();
  Matrix q(order, raw.cols());
  Matrix coeffs = Matrix::Zero(order, order);
  const auto inner = [&weights](const RowVector& a, const RowVector& b) {
    return (a.array() * b.array() * weights.transpose().array()).sum();
  };
  for (Eigen::Index n = 0; n < order; ++n) {
    RowVector v = raw.row(n);
    RowVector c = RowVector::Zero(order);
    c(n) = 1;
    const Scalar original = std::sqrt(inner(v, v));
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const Scalar r = inner(v, q.row(j));
        v -= r * q.row(j);
        c -= r * coeffs.row(j);
      }
    }
    const Scalar norm = std::sqrt(inner(v, v));
    if (!(norm > 100 * std::numeric_limits<Scalar>::epsilon() * original))
      throw std::runtime_error("orthonormalize: raw function " + std::to_string(n + 1) +
                               " is numerically dependent on its predecessors");
    q.row(n) = v / norm;
    coeffs.row(n) = c / norm;
  }
  return coeffs;
}

/// Orthonormal basis of L^2(0, T) obtained from (t - T/2)^(n-1) exp(t - T/2),
/// together with its exact derivatives and the coupling matrix
/// S(m, n) = int_0^T psi_n'(t) psi_m(t) dt, which is unit upper triangular.
///
/// The construction runs in extended precision on P_{k-1}(s) exp(t - T/2),
/// s = (t - T/2)/(T/2), with P_j the Legendre polynomials. These span the same
/// nested spaces as the raw functions, so Gram-Schmidt yields the same psi_n,
/// but the expansion coefficients stay O(1) instead of growing geometrically.
template <typename Scalar>
class TimeBasis {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Work = std::conditional_t<(std::numeric_limits<Scalar>::digits <
                                   std::numeric_limits<long double>::digits),
                                  long double, Scalar>;
  using WorkVector = Eigen::Matrix<Work, Eigen::Dynamic, 1>;
  using WorkMatrix = Eigen::Matrix<Work, Eigen::Dynamic, Eigen::Dynamic>;

  struct Quadrature {
    int points_per_panel = 8;
    int panels = 256;
  };

  TimeBasis(Scalar final_time, int order) : TimeBasis(final_time, order, Quadrature{}) {}

  TimeBasis(Scalar final_time, int order, Quadrature quadrature)
      : final_time_(final_time), order_(order), quadrature_(quadrature) {
    if (!(final_time > 0)) throw std::invalid_argument("TimeBasis: final time must be positive");
    if (order < 1 || order > kMaxBasisOrder)
      throw std::invalid_argument("TimeBasis: order must lie in [1, " +
                                  std::to_string(kMaxBasisOrder) + "]");
    const Work T = static_cast<Work>(final_time);
    const auto rule =
        composite_gauss_legendre<Work>(0, T, quadrature.points_per_panel, quadrature.panels);
    const WorkMatrix raw = legendre_exponential(rule.nodes);
    coeffs_ = orthonormalize<Work>(raw, rule.weights);

    // d/dt [P_k(s) e] = (P_k(s) + (2/T) P_k'(s)) e, P_k' = sum_{j<k, k-j odd} (2j+1) P_j.
    dcoeffs_ = coeffs_;
    for (int k = 1; k < order; ++k)
      for (int j = k - 1; j >= 0; j -= 2)
        dcoeffs_.col(j) += coeffs_.col(k) * (Work(2 * j + 1) * 2 / T);

    const WorkMatrix values = coeffs_ * raw;
    const WorkMatrix derivs = dcoeffs_ * raw;
    quad_nodes_ = rule.nodes.template cast<Scalar>();
    quad_weights_ = rule.weights.template cast<Scalar>();
    values_ = values.template cast<Scalar>();
    derivs_ = derivs.template cast<Scalar>();
    const WorkMatrix s = values * rule.weights.asDiagonal() * derivs.transpose();
    stiffness_ = s.template cast<Scalar>();
    psi0_ = evaluate(Scalar(0));
    psiT_ = evaluate(final_time);
  }

  Scalar final_time() const { return final_time_; }
  int order() const { return order_; }
  Quadrature quadrature() const { return quadrature_; }

  /// psi_n(t), n = 1..order.
  Vector evaluate(Scalar t) const { return eval(coeffs_, t); }
  /// psi_n'(t) from the exact derivative recurrence.
  Vector evaluate_derivative(Scalar t) const { return eval(dcoeffs_, t); }

  /// order x times.size() matrix of psi_n(t_l).
  template <typename Derived>
  Matrix sample(const Eigen::MatrixBase<Derived>& times) const {
    Matrix out(order_, times.size());
    for (Eigen::Index l = 0; l < times.size(); ++l) out.col(l) = evaluate(times(l));
    return out;
  }
  template <typename Derived>
  Matrix sample_derivative(const Eigen::MatrixBase<Derived>& times) const {
    Matrix out(order_, times.size());
    for (Eigen::Index l = 0; l < times.size(); ++l) out.col(l) = evaluate_derivative(times(l));
    return out;
  }

  const Vector& psi0() const { return psi0_; }
  const Vector& psiT() const { return psiT_; }
  /// S(m, n) = int psi_n' psi_m dt (0-based m, n).
  const Matrix& stiffness() const { return stiffness_; }

  const Vector& quadrature_nodes() const { return quad_nodes_; }
  const Vector& quadrature_weights() const { return quad_weights_; }
  /// psi_n at the quadrature nodes (row n-1).
  const Matrix& values() const { return values_; }
  const Matrix& derivatives() const { return derivs_; }

  /// Coefficients of psi_n with respect to the raw functions
  /// (t - T/2)^(k-1) exp(t - T/2). Entries grow geometrically with k; use
  /// evaluate() for accurate values.
  Matrix raw_coefficients() const {
    // Row j: P_j in powers of s.
    WorkMatrix to_monomial = WorkMatrix::Zero(order_, order_);
    to_monomial(0, 0) = 1;
    if (order_ > 1) to_monomial(1, 1) = 1;
    for (int j = 1; j + 1 < order_; ++j) {
      for (int k = 0; k < order_; ++k) {
        Work v = -Work(j) * to_monomial(j - 1, k);
        if (k > 0) v += Work(2 * j + 1) * to_monomial(j, k - 1);
        to_monomial(j + 1, k) = v / Work(j + 1);
      }
    }
    WorkMatrix c = coeffs_ * to_monomial;
    const Work half = static_cast<Work>(final_time_) / 2;
    Work scale = 1;
    for (int k = 0; k < order_; ++k) {
      c.col(k) /= scale;
      scale *= half;
    }
    return c.template cast<Scalar>();
  }

  /// Debug dump: header "t,psi_1,...,psi_N" and one row per requested time.
  template <typename Derived>
  void write_csv(std::ostream& out, const Eigen::MatrixBase<Derived>& times) const {
    out << "t";
    for (int n = 1; n <= order_; ++n) out << ",psi_" << n;
    out << '\n';
    out.precision(17);
    for (Eigen::Index l = 0; l < times.size(); ++l) {
      const Vector v = evaluate(times(l));
      out << times(l);
      for (int n = 0; n < order_; ++n) out << ',' << v(n);
      out << '\n';
    }
  }

 private:
  // Column l: P_k(s(t_l)) exp(t_l - T/2), k = 0..order-1.
  WorkMatrix legendre_exponential(const WorkVector& times) const {
    WorkMatrix out(order_, times.size());
    for (Eigen::Index l = 0; l < times.size(); ++l) out.col(l) = legendre_column(times(l));
    return out;
  }

  WorkVector legendre_column(Work t) const {
    const Work half = static_cast<Work>(final_time_) / 2;
    const Work s = (t - half) / half;
    WorkVector p(order_);
    p(0) = 1;
    if (order_ > 1) p(1) = s;
    for (int j = 1; j + 1 < order_; ++j)
      p(j + 1) = (Work(2 * j + 1) * s * p(j) - Work(j) * p(j - 1)) / Work(j + 1);
    return p * std::exp(t - half);
  }

  Vector eval(const WorkMatrix& c, Scalar t) const {
    return (c * legendre_column(static_cast<Work>(t))).template cast<Scalar>();
  }

  Scalar final_time_;
  int order_;
  Quadrature quadrature_;
  WorkMatrix coeffs_;
  WorkMatrix dcoeffs_;
  Vector quad_nodes_;
  Vector quad_weights_;
  Matrix values_;
  Matrix derivs_;
  Matrix stiffness_;
  Vector psi0_;
  Vector psiT_;
};

}  // namespace cip
