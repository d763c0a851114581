#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cip {

/// Uniform square grid on [-R, R]^2 with `nodes` points per axis,
/// x_i = -R + i * h, i = 0..nodes-1 (same for y).
template <typename Scalar>
class SpaceGrid {
 public:
  SpaceGrid(Scalar half_width, Eigen::Index nodes) : half_width_(half_width), nodes_(nodes) {
    if (nodes < 3) throw std::invalid_argument("SpaceGrid: need at least 3 nodes per axis");
    if (!(half_width > 0)) throw std::invalid_argument("SpaceGrid: half width must be positive");
  }

  Scalar half_width() const { return half_width_; }
  Eigen::Index nodes() const { return nodes_; }
  Scalar spacing() const { return 2 * half_width_ / Scalar(nodes_ - 1); }
  Scalar coordinate(Eigen::Index i) const {
    return i == nodes_ - 1 ? half_width_ : -half_width_ + spacing() * Scalar(i);
  }
  bool on_boundary(Eigen::Index i, Eigen::Index j) const {
    return i == 0 || j == 0 || i == nodes_ - 1 || j == nodes_ - 1;
  }

  bool operator==(const SpaceGrid&) const = default;

 private:
  Scalar half_width_;
  Eigen::Index nodes_;
};

/// Nodal values on a SpaceGrid; values(i, j) sits at (x_i, y_j).
template <typename Scalar>
struct ScalarField {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  SpaceGrid<Scalar> grid;
  Matrix values;

  explicit ScalarField(const SpaceGrid<Scalar>& g)
      : grid(g), values(Matrix::Zero(g.nodes(), g.nodes())) {}
  ScalarField(const SpaceGrid<Scalar>& g, Matrix v) : grid(g), values(std::move(v)) {
    if (values.rows() != g.nodes() || values.cols() != g.nodes())
      throw std::invalid_argument("ScalarField: value dimensions do not match the grid");
  }

  Scalar operator()(Eigen::Index i, Eigen::Index j) const { return values(i, j); }
  Scalar& operator()(Eigen::Index i, Eigen::Index j) { return values(i, j); }
};

/// Nodewise evaluation of fn(x, y).
template <typename Scalar, typename Fn>
ScalarField<Scalar> sample_field(const SpaceGrid<Scalar>& grid, Fn&& fn) {
  ScalarField<Scalar> field(grid);
  for (Eigen::Index i = 0; i < grid.nodes(); ++i)
    for (Eigen::Index j = 0; j < grid.nodes(); ++j)
      field(i, j) = fn(grid.coordinate(i), grid.coordinate(j));
  return field;
}

template <typename Scalar>
ScalarField<Scalar> constant_field(const SpaceGrid<Scalar>& grid, Scalar value) {
  return ScalarField<Scalar>(
      grid, ScalarField<Scalar>::Matrix::Constant(grid.nodes(), grid.nodes(), value));
}

/// Discrete Laplacian: the five-point stencil at interior nodes and
/// second-order one-sided second differences along the normal direction on
/// boundary nodes (first order when the grid has only 3 nodes per axis).
template <typename Scalar>
ScalarField<Scalar> laplacian(const ScalarField<Scalar>& u) {
  const Eigen::Index n = u.grid.nodes();
  const Scalar inv_h2 = 1 / (u.grid.spacing() * u.grid.spacing());
  // Second difference along one axis at position k of a line accessor.
  const auto second = [n](auto&& at, Eigen::Index k) -> Scalar {
    if (k > 0 && k + 1 < n) return at(k - 1) - 2 * at(k) + at(k + 1);
    const int s = k == 0 ? 1 : -1;
    if (n < 4) return at(k) - 2 * at(k + s) + at(k + 2 * s);
    return 2 * at(k) - 5 * at(k + s) + 4 * at(k + 2 * s) - at(k + 3 * s);
  };
  ScalarField<Scalar> out(u.grid);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const Scalar uxx = second([&](Eigen::Index k) { return u(k, j); }, i);
      const Scalar uyy = second([&](Eigen::Index k) { return u(i, k); }, j);
      out(i, j) = (uxx + uyy) * inv_h2;
    }
  }
  return out;
}

/// Bilinear interpolation of nodal values at (x, y); the point must lie in
/// the closed grid square.
template <typename Scalar, typename Derived>
Scalar interpolate_bilinear(const SpaceGrid<Scalar>& grid, const Eigen::MatrixBase<Derived>& values,
                            Scalar x, Scalar y) {
  const Scalar h = grid.spacing();
  const Scalar R = grid.half_width();
  const Scalar tol = 1e-12 * R;
  if (x < -R - tol || x > R + tol || y < -R - tol || y > R + tol)
    throw std::out_of_range("interpolate_bilinear: point outside the grid");
  const Eigen::Index last = grid.nodes() - 2;
  const auto locate = [&](Scalar s, Eigen::Index& cell, Scalar& frac) {
    const Scalar p = (s + R) / h;
    cell = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(p)), 0, last);
    frac = p - Scalar(cell);
  };
  Eigen::Index i, j;
  Scalar a, b;
  locate(x, i, a);
  locate(y, j, b);
  return (1 - a) * (1 - b) * values(i, j) + a * (1 - b) * values(i + 1, j) +
         (1 - a) * b * values(i, j + 1) + a * b * values(i + 1, j + 1);
}

/// One node of the discrete boundary, listed once (corners included once).
struct BoundaryNode {
  int edge;  ///< 0: y = -R, 1: x = +R, 2: y = +R, 3: x = -R
  Eigen::Index i;
  Eigen::Index j;
  bool corner;
  int normal_x;  ///< outward normal of the owning edge
  int normal_y;

  bool operator==(const BoundaryNode&) const = default;
};

/// Boundary nodes walked counterclockwise from (-R, -R); each edge owns the
/// corner at its start.
inline std::vector<BoundaryNode> boundary_nodes(Eigen::Index n) {
  if (n < 3) throw std::invalid_argument("boundary_nodes: need at least 3 nodes per axis");
  std::vector<BoundaryNode> nodes;
  nodes.reserve(std::size_t(4 * (n - 1)));
  const auto corner = [n](Eigen::Index i, Eigen::Index j) {
    return (i == 0 || i == n - 1) && (j == 0 || j == n - 1);
  };
  for (Eigen::Index i = 0; i < n - 1; ++i) nodes.push_back({0, i, 0, corner(i, 0), 0, -1});
  for (Eigen::Index j = 0; j < n - 1; ++j) nodes.push_back({1, n - 1, j, corner(n - 1, j), 1, 0});
  for (Eigen::Index i = n - 1; i > 0; --i) nodes.push_back({2, i, n - 1, corner(i, n - 1), 0, 1});
  for (Eigen::Index j = n - 1; j > 0; --j) nodes.push_back({3, 0, j, corner(0, j), -1, 0});
  return nodes;
}

}  // namespace cip
