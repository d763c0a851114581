#pragma once

#include "cip/grid.hpp"
#include "cip/time_basis.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cip {

/// Snapshots u(., t_l), l = 0..time.size()-1, on the simulation grid.
template <typename Scalar>
struct ForwardSolution {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  SpaceGrid<Scalar> grid;
  TimeGrid<Scalar> time;
  std::vector<Matrix> snapshots;

  ScalarField<Scalar> snapshot(Eigen::Index l) const { return {grid, snapshots.at(std::size_t(l))}; }
};

/// Lateral Cauchy data on the boundary of the inversion grid: rows follow
/// `nodes`, columns follow `time`.
template <typename Scalar>
struct BoundaryTimeSeries {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  SpaceGrid<Scalar> grid;
  std::vector<BoundaryNode> nodes;
  TimeGrid<Scalar> time;
  Matrix dirichlet;  ///< F = u
  Matrix neumann;    ///< G = du/dnu
};

template <typename Scalar>
struct ForwardOptions {
  /// Optional source s(x, y, t) added to the right-hand side; evaluated at
  /// the new time level. Only used for manufactured-solution checks.
  std::function<Scalar(Scalar, Scalar, Scalar)> source;
};

/// Implicit Euler for u_t = Lap u + c u on the simulation square with
/// u(., 0) = f and the time-independent Dirichlet condition u = f on the
/// boundary. The step matrix I - dt (Lap_h + diag c) is factored once.
template <typename Scalar>
ForwardSolution<Scalar> solve_forward(const ScalarField<Scalar>& c, const ScalarField<Scalar>& f,
                                      const TimeGrid<Scalar>& time,
                                      const ForwardOptions<Scalar>& options = {}) {
  using Matrix = typename ForwardSolution<Scalar>::Matrix;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using SpMat = Eigen::SparseMatrix<Scalar>;
  if (!(c.grid == f.grid)) throw std::invalid_argument("solve_forward: c and f live on different grids");
  if (!c.values.allFinite() || !f.values.allFinite())
    throw std::invalid_argument("solve_forward: non-finite coefficient or initial data");

  const SpaceGrid<Scalar>& grid = f.grid;
  const Eigen::Index n = grid.nodes();
  const Eigen::Index m = n - 2;
  const Scalar h = grid.spacing();
  const Scalar dt = time.step();
  const Scalar r = dt / (h * h);
  const auto unknown = [m](Eigen::Index i, Eigen::Index j) { return (i - 1) * m + (j - 1); };

  std::vector<Eigen::Triplet<Scalar>> triplets;
  triplets.reserve(std::size_t(5 * m * m));
  Vector boundary_rhs = Vector::Zero(m * m);
  for (Eigen::Index i = 1; i <= m; ++i) {
    for (Eigen::Index j = 1; j <= m; ++j) {
      const Eigen::Index row = unknown(i, j);
      triplets.emplace_back(row, row, 1 + 4 * r - dt * c(i, j));
      const Eigen::Index ni[4] = {i - 1, i + 1, i, i};
      const Eigen::Index nj[4] = {j, j, j - 1, j + 1};
      for (int k = 0; k < 4; ++k) {
        if (grid.on_boundary(ni[k], nj[k]))
          boundary_rhs(row) += r * f(ni[k], nj[k]);
        else
          triplets.emplace_back(row, unknown(ni[k], nj[k]), -r);
      }
    }
  }
  SpMat step(m * m, m * m);
  step.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::SimplicialLDLT<SpMat> solver(step);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("solve_forward: factorization of the step matrix failed");

  ForwardSolution<Scalar> out{grid, time, {}};
  out.snapshots.reserve(std::size_t(time.size()));
  out.snapshots.push_back(f.values);
  Vector u(m * m);
  for (Eigen::Index i = 1; i <= m; ++i)
    for (Eigen::Index j = 1; j <= m; ++j) u(unknown(i, j)) = f(i, j);

  for (Eigen::Index l = 1; l < time.size(); ++l) {
    Vector rhs = u + boundary_rhs;
    if (options.source) {
      const Scalar t = time.node(l);
      for (Eigen::Index i = 1; i <= m; ++i)
        for (Eigen::Index j = 1; j <= m; ++j)
          rhs(unknown(i, j)) += dt * options.source(grid.coordinate(i), grid.coordinate(j), t);
    }
    u = solver.solve(rhs);
    if (solver.info() != Eigen::Success)
      throw std::runtime_error("solve_forward: linear solve failed at step " + std::to_string(l));
    if (!u.allFinite())
      throw std::runtime_error("solve_forward: non-finite values at step " + std::to_string(l));
    Matrix snap = f.values;
    for (Eigen::Index i = 1; i <= m; ++i)
      for (Eigen::Index j = 1; j <= m; ++j) snap(i, j) = u(unknown(i, j));
    out.snapshots.push_back(std::move(snap));
  }
  return out;
}

/// Central-difference gradient at interior nodes; boundary entries are zero.
template <typename Scalar>
std::pair<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>,
          Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>
central_gradient(const SpaceGrid<Scalar>& grid,
                 const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& u) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = grid.nodes();
  const Scalar inv_2h = 1 / (2 * grid.spacing());
  Matrix gx = Matrix::Zero(n, n), gy = Matrix::Zero(n, n);
  gx.block(1, 0, n - 2, n) = (u.bottomRows(n - 2) - u.topRows(n - 2)) * inv_2h;
  gy.block(0, 1, n, n - 2) = (u.rightCols(n - 2) - u.leftCols(n - 2)) * inv_2h;
  return {gx, gy};
}

/// Samples F = u and G = du/dnu on the boundary nodes of `target`, which must
/// sit strictly inside the simulation square. u is interpolated bilinearly;
/// the normal derivative comes from central differences on the simulation
/// grid, interpolated bilinearly along the edge.
template <typename Scalar>
BoundaryTimeSeries<Scalar> extract_cauchy(const ForwardSolution<Scalar>& solution,
                                          const SpaceGrid<Scalar>& target) {
  const SpaceGrid<Scalar>& fine = solution.grid;
  // Interpolation cells around the target boundary must avoid the simulation
  // boundary rows, where the central gradient is undefined.
  if (!(target.half_width() + fine.spacing() < fine.half_width() - fine.spacing()))
    throw std::invalid_argument("extract_cauchy: target grid is not strictly inside the simulation grid");

  BoundaryTimeSeries<Scalar> out{target, boundary_nodes(target.nodes()), solution.time, {}, {}};
  const auto count = Eigen::Index(out.nodes.size());
  out.dirichlet.resize(count, solution.time.size());
  out.neumann.resize(count, solution.time.size());
  for (Eigen::Index l = 0; l < solution.time.size(); ++l) {
    const auto& u = solution.snapshots.at(std::size_t(l));
    if (!u.allFinite()) throw std::invalid_argument("extract_cauchy: non-finite snapshot");
    const auto [gx, gy] = central_gradient(fine, u);
    for (Eigen::Index k = 0; k < count; ++k) {
      const BoundaryNode& node = out.nodes[std::size_t(k)];
      const Scalar x = target.coordinate(node.i);
      const Scalar y = target.coordinate(node.j);
      out.dirichlet(k, l) = interpolate_bilinear(fine, u, x, y);
      Scalar g = 0;
      if (node.normal_x != 0) g += node.normal_x * interpolate_bilinear(fine, gx, x, y);
      if (node.normal_y != 0) g += node.normal_y * interpolate_bilinear(fine, gy, x, y);
      out.neumann(k, l) = g;
    }
  }
  return out;
}

}  // namespace cip
