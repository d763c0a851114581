#pragma once

#include "cip/forward_sim.hpp"
#include "cip/grid.hpp"
#include "cip/quadrature.hpp"
#include "cip/time_basis.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace cip {

/// Fourier coefficients F_m, G_m of the time derivative of the lateral
/// Cauchy data; rows follow `nodes`, column m-1 holds mode m.
template <typename Scalar>
struct FourierBoundaryData {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  SpaceGrid<Scalar> grid;
  std::vector<BoundaryNode> nodes;
  Scalar final_time;
  Matrix dirichlet;
  Matrix neumann;
  Scalar noise_level = 0;
  std::uint64_t seed = 0;

  int order() const { return int(dirichlet.cols()); }
};

namespace detail {

// First node of the local interpolation stencil serving interval [t_k, t_{k+1}].
inline Eigen::Index stencil_start(Eigen::Index count, Eigen::Index interval, int degree) {
  return std::clamp<Eigen::Index>(interval - 1, 0, count - 1 - degree);
}

// Lagrange cardinal values (and derivatives) at t for nodes t_start..t_start+degree.
template <typename Scalar>
void lagrange(const TimeGrid<Scalar>& time, Eigen::Index start, int degree, Scalar t,
              Scalar* value, Scalar* derivative) {
  for (int a = 0; a <= degree; ++a) {
    const Scalar ta = time.node(start + a);
    Scalar v = 1, d = 0;
    for (int b = 0; b <= degree; ++b) {
      if (b == a) continue;
      const Scalar tb = time.node(start + b);
      d = d * (t - tb) / (ta - tb) + v / (ta - tb);
      v *= (t - tb) / (ta - tb);
    }
    if (value) value[a] = v;
    if (derivative) derivative[a] = d;
  }
}

}  // namespace detail

/// Weights W (order x time.size()) with sum_l W(m, l) F(t_l) = int_0^T F_t psi_m dt
/// for the piecewise-cubic Lagrange interpolant of the samples. The integral
/// is taken by parts, F(T) psi_m(T) - F(0) psi_m(0) - int F psi_m' dt, and the
/// last term is integrated exactly against psi_m' with Gauss-Legendre on
/// every sampling interval.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> projection_weights(
    const TimeBasis<Scalar>& basis, const TimeGrid<Scalar>& time) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Scalar T = time.final_time();
  if (std::abs(T - basis.final_time()) > 1e-12 * T)
    throw std::invalid_argument("projection_weights: basis and series use different final times");
  const Eigen::Index count = time.size();
  const int degree = int(std::min<Eigen::Index>(3, count - 1));
  const auto rule = gauss_legendre<Scalar>(8);

  Matrix w = Matrix::Zero(basis.order(), count);
  w.col(count - 1) += basis.psiT();
  w.col(0) -= basis.psi0();
  Scalar card[4];
  for (Eigen::Index k = 0; k + 1 < count; ++k) {
    const Scalar a = time.node(k), b = time.node(k + 1);
    const Eigen::Index start = detail::stencil_start(count, k, degree);
    for (Eigen::Index q = 0; q < rule.size(); ++q) {
      const Scalar t = a + (b - a) * (rule.nodes(q) + 1) / 2;
      const Scalar weight = (b - a) * rule.weights(q) / 2;
      const Vector dpsi = basis.evaluate_derivative(t);
      detail::lagrange(time, start, degree, t, card, static_cast<Scalar*>(nullptr));
      for (int s = 0; s <= degree; ++s) w.col(start + s) -= weight * card[s] * dpsi;
    }
  }
  return w;
}

/// Weights d with sum_l d(l) F(t_l) = p'(t) for the same piecewise-cubic
/// interpolant p used by projection_weights.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> interpolant_derivative_weights(const TimeGrid<Scalar>& time,
                                                                       Scalar t) {
  const Eigen::Index count = time.size();
  const int degree = int(std::min<Eigen::Index>(3, count - 1));
  const Eigen::Index interval =
      std::clamp<Eigen::Index>(Eigen::Index(std::floor(t / time.step())), 0, count - 2);
  const Eigen::Index start = detail::stencil_start(count, interval, degree);
  Scalar deriv[4];
  detail::lagrange(time, start, degree, t, static_cast<Scalar*>(nullptr), deriv);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> d = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(count);
  for (int s = 0; s <= degree; ++s) d(start + s) = deriv[s];
  return d;
}

/// F_m = int_0^T F_t psi_m dt and G_m likewise, for every boundary node.
template <typename Scalar>
FourierBoundaryData<Scalar> project(const BoundaryTimeSeries<Scalar>& series,
                                    const TimeBasis<Scalar>& basis) {
  const auto w = projection_weights(basis, series.time);
  FourierBoundaryData<Scalar> out{series.grid, series.nodes, series.time.final_time(), {}, {}};
  out.dirichlet = series.dirichlet * w.transpose();
  out.neumann = series.neumann * w.transpose();
  return out;
}

/// Multiplies every entry of F_m and G_m by (1 + delta r), r uniform on
/// [-1, 1], drawn from a 64-bit Mersenne Twister seeded with `seed`: all F
/// entries first (node-major, mode-minor), then all G entries.
template <typename Scalar>
FourierBoundaryData<Scalar> add_noise(const FourierBoundaryData<Scalar>& data, Scalar delta,
                                      std::uint64_t seed) {
  if (!(delta >= 0)) throw std::invalid_argument("add_noise: noise level must be non-negative");
  FourierBoundaryData<Scalar> out = data;
  out.noise_level = delta;
  out.seed = seed;
  if (delta == 0) return out;
  std::mt19937_64 gen(seed);
  // 53 random bits mapped to [-1, 1); portable across standard libraries.
  const auto draw = [&gen]() {
    return Scalar(2) * Scalar(double(gen() >> 11) * 0x1.0p-53) - Scalar(1);
  };
  for (auto* m : {&out.dirichlet, &out.neumann})
    for (Eigen::Index k = 0; k < m->rows(); ++k)
      for (Eigen::Index n = 0; n < m->cols(); ++n) (*m)(k, n) *= 1 + delta * draw();
  return out;
}

}  // namespace cip
