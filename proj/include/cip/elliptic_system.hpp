#pragma once

#include "cip/fourier_data.hpp"
#include "cip/grid.hpp"
#include "cip/time_basis.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cmath>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace cip {

/// Flat unknown index k = (i * nodes + j) * order + m, all 0-based; mode m
/// at node (x_i, y_j).
class IndexMap {
 public:
  IndexMap(Eigen::Index nodes, Eigen::Index order) : nodes_(nodes), order_(order) {
    if (nodes < 1 || order < 1) throw std::invalid_argument("IndexMap: empty grid or basis");
  }

  Eigen::Index nodes() const { return nodes_; }
  Eigen::Index order() const { return order_; }
  Eigen::Index size() const { return nodes_ * nodes_ * order_; }

  Eigen::Index operator()(Eigen::Index i, Eigen::Index j, Eigen::Index m) const {
    return (i * nodes_ + j) * order_ + m;
  }
  std::tuple<Eigen::Index, Eigen::Index, Eigen::Index> unmap(Eigen::Index k) const {
    const Eigen::Index m = k % order_;
    const Eigen::Index node = k / order_;
    return {node / nodes_, node % nodes_, m};
  }

 private:
  Eigen::Index nodes_;
  Eigen::Index order_;
};

/// Mode coefficients v_m at every node: row i * nodes + j, column m. Row-major
/// storage makes the raw data coincide with the flat IndexMap vector.
template <typename Scalar>
using ModeField = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
ModeField<Scalar> to_modes(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& flat, const IndexMap& map) {
  if (flat.size() != map.size()) throw std::invalid_argument("to_modes: size mismatch");
  return Eigen::Map<const ModeField<Scalar>>(flat.data(), map.nodes() * map.nodes(), map.order());
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> to_flat(const ModeField<Scalar>& modes) {
  return Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(modes.data(), modes.size());
}

/// Sparse blocks of the discrete functional
///   J(v) = w_pde |A v|^2 + w_bdy (|D1 v - F|^2 + |D2 v - G|^2)
///        + eps w_pde (|v|^2 + |Dx v|^2 + |Dy v|^2)
/// with A the predictor or corrector operator, w_pde = h^2 and w_bdy = h.
template <typename Scalar>
struct OperatorBlocks {
  using SpMat = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  IndexMap map{1, 1};
  SpMat interior;
  SpMat dirichlet;
  SpMat neumann;
  SpMat grad_x;
  SpMat grad_y;
  Vector data_dirichlet;
  Vector data_neumann;
  Scalar w_pde = 0;
  Scalar w_bdy = 0;
  Scalar epsilon = Scalar(1e-9);
};

namespace detail {

template <typename Scalar>
void check_nonvanishing(const ScalarField<Scalar>& f) {
  for (Eigen::Index i = 0; i < f.grid.nodes(); ++i)
    for (Eigen::Index j = 0; j < f.grid.nodes(); ++j)
      if (!(std::abs(f(i, j)) >= Scalar(1e-12)))
        throw std::invalid_argument("f vanishes (|f| < 1e-12) at node (" + std::to_string(i) + ", " +
                                    std::to_string(j) + ")");
}

// Predictor entries of interior rows; `coupling(i, j, m, n)` is added to the
// cross-mode entry in column (i, j, n). Every (m, n) pair is emitted so the
// pattern does not depend on the coupling values.
template <typename Scalar, typename Coupling>
typename OperatorBlocks<Scalar>::SpMat interior_operator(const ScalarField<Scalar>& f,
                                                         const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& s,
                                                         Coupling&& coupling) {
  check_nonvanishing(f);
  const Eigen::Index n = f.grid.nodes();
  const Eigen::Index order = s.rows();
  const IndexMap map(n, order);
  const Scalar inv_h2 = 1 / (f.grid.spacing() * f.grid.spacing());
  const ScalarField<Scalar> lap_f = laplacian(f);

  std::vector<Eigen::Triplet<Scalar>> triplets;
  triplets.reserve(std::size_t((n - 2) * (n - 2) * order * (order + 4)));
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    for (Eigen::Index j = 1; j + 1 < n; ++j) {
      const Scalar potential = lap_f(i, j) / f(i, j);
      for (Eigen::Index m = 0; m < order; ++m) {
        const Eigen::Index row = map(i, j, m);
        for (Eigen::Index k = 0; k < order; ++k) {
          Scalar value = -s(m, k) + coupling(i, j, m, k);
          if (k == m) value += -4 * inv_h2 - potential;
          triplets.emplace_back(row, map(i, j, k), value);
        }
        triplets.emplace_back(row, map(i - 1, j, m), inv_h2);
        triplets.emplace_back(row, map(i + 1, j, m), inv_h2);
        triplets.emplace_back(row, map(i, j - 1, m), inv_h2);
        triplets.emplace_back(row, map(i, j + 1, m), inv_h2);
      }
    }
  }
  typename OperatorBlocks<Scalar>::SpMat out(map.size(), map.size());
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

}  // namespace detail

/// Predictor operator: Lap_h v_m - sum_n s_mn v_n - (Lap_h f / f) v_m at
/// interior nodes, zero rows on the boundary.
template <typename Scalar>
typename OperatorBlocks<Scalar>::SpMat assemble_linear(const ScalarField<Scalar>& f,
                                                       const TimeBasis<Scalar>& basis) {
  return detail::interior_operator(f, basis.stiffness(),
                                   [](Eigen::Index, Eigen::Index, Eigen::Index, Eigen::Index) { return Scalar(0); });
}

/// Corrector operator: the predictor plus psi_n(0) v^(p)_m / f in column
/// (i, j, n) of row (i, j, m), which linearizes sum_n psi_n(0) v_n v_m / f
/// about the previous iterate.
template <typename Scalar>
typename OperatorBlocks<Scalar>::SpMat assemble_nonlinear(const ScalarField<Scalar>& f,
                                                          const TimeBasis<Scalar>& basis,
                                                          const ModeField<Scalar>& previous) {
  const Eigen::Index n = f.grid.nodes();
  if (previous.rows() != n * n || previous.cols() != basis.order())
    throw std::invalid_argument("assemble_nonlinear: previous iterate has the wrong shape");
  if (!previous.allFinite()) throw std::invalid_argument("assemble_nonlinear: non-finite previous iterate");
  const auto& psi0 = basis.psi0();
  return detail::interior_operator(f, basis.stiffness(),
                                   [&](Eigen::Index i, Eigen::Index j, Eigen::Index m, Eigen::Index k) {
                                     return psi0(k) * previous(i * n + j, m) / f(i, j);
                                   });
}

/// Dirichlet and Neumann blocks with their data vectors. Every boundary node
/// gets a Dirichlet row; non-corner nodes also get the one-sided normal
/// difference (v_b - v_inward) / h.
template <typename Scalar>
void assemble_boundary(const FourierBoundaryData<Scalar>& data, const SpaceGrid<Scalar>& grid,
                       OperatorBlocks<Scalar>& blocks) {
  using SpMat = typename OperatorBlocks<Scalar>::SpMat;
  using Vector = typename OperatorBlocks<Scalar>::Vector;
  if (!(data.grid == grid)) throw std::invalid_argument("assemble_boundary: data grid differs from the inversion grid");
  if (data.nodes != boundary_nodes(grid.nodes()))
    throw std::invalid_argument("assemble_boundary: boundary node ordering does not match the grid");
  const Eigen::Index order = data.order();
  const auto count = Eigen::Index(data.nodes.size());
  if (data.dirichlet.rows() != count || data.neumann.rows() != count || data.neumann.cols() != order)
    throw std::invalid_argument("assemble_boundary: data dimensions do not match the node list");

  const IndexMap map(grid.nodes(), order);
  const Scalar inv_h = 1 / grid.spacing();
  std::vector<Eigen::Triplet<Scalar>> d1, d2;
  d1.reserve(std::size_t(count * order));
  d2.reserve(std::size_t(2 * count * order));
  Vector f = Vector::Zero(map.size()), g = Vector::Zero(map.size());
  for (Eigen::Index k = 0; k < count; ++k) {
    const BoundaryNode& b = data.nodes[std::size_t(k)];
    for (Eigen::Index m = 0; m < order; ++m) {
      const Eigen::Index row = map(b.i, b.j, m);
      d1.emplace_back(row, row, Scalar(1));
      f(row) = data.dirichlet(k, m);
      if (b.corner) continue;
      d2.emplace_back(row, row, inv_h);
      d2.emplace_back(row, map(b.i - b.normal_x, b.j - b.normal_y, m), -inv_h);
      g(row) = data.neumann(k, m);
    }
  }
  blocks.map = map;
  blocks.dirichlet = SpMat(map.size(), map.size());
  blocks.dirichlet.setFromTriplets(d1.begin(), d1.end());
  blocks.neumann = SpMat(map.size(), map.size());
  blocks.neumann.setFromTriplets(d2.begin(), d2.end());
  blocks.data_dirichlet = std::move(f);
  blocks.data_neumann = std::move(g);
}

/// Forward differences (v_{i+1,j} - v_{i,j}) / h and (v_{i,j+1} - v_{i,j}) / h;
/// rows at the last index are zero.
template <typename Scalar>
std::pair<typename OperatorBlocks<Scalar>::SpMat, typename OperatorBlocks<Scalar>::SpMat> assemble_gradient(
    const SpaceGrid<Scalar>& grid, Eigen::Index order) {
  using SpMat = typename OperatorBlocks<Scalar>::SpMat;
  const Eigen::Index n = grid.nodes();
  const IndexMap map(n, order);
  const Scalar inv_h = 1 / grid.spacing();
  std::vector<Eigen::Triplet<Scalar>> tx, ty;
  tx.reserve(std::size_t(2 * map.size()));
  ty.reserve(std::size_t(2 * map.size()));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index m = 0; m < order; ++m) {
        const Eigen::Index row = map(i, j, m);
        if (i + 1 < n) {
          tx.emplace_back(row, map(i + 1, j, m), inv_h);
          tx.emplace_back(row, row, -inv_h);
        }
        if (j + 1 < n) {
          ty.emplace_back(row, map(i, j + 1, m), inv_h);
          ty.emplace_back(row, row, -inv_h);
        }
      }
  SpMat dx(map.size(), map.size()), dy(map.size(), map.size());
  dx.setFromTriplets(tx.begin(), tx.end());
  dy.setFromTriplets(ty.begin(), ty.end());
  return {std::move(dx), std::move(dy)};
}

/// All blocks for one QRM solve. With `previous` null the interior operator
/// is the predictor, otherwise the corrector about *previous.
template <typename Scalar>
OperatorBlocks<Scalar> assemble_system(const ScalarField<Scalar>& f, const TimeBasis<Scalar>& basis,
                                       const FourierBoundaryData<Scalar>& data, Scalar epsilon,
                                       const ModeField<Scalar>* previous = nullptr) {
  if (data.order() != basis.order())
    throw std::invalid_argument("assemble_system: data and basis use different truncation orders");
  OperatorBlocks<Scalar> blocks;
  assemble_boundary(data, f.grid, blocks);
  blocks.interior = previous ? assemble_nonlinear(f, basis, *previous) : assemble_linear(f, basis);
  std::tie(blocks.grad_x, blocks.grad_y) = assemble_gradient(f.grid, Eigen::Index(basis.order()));
  const Scalar h = f.grid.spacing();
  blocks.w_pde = h * h;
  blocks.w_bdy = h;
  blocks.epsilon = epsilon;
  return blocks;
}

}  // namespace cip
