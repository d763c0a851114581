#pragma once

#include "cip/elliptic_system.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <memory>
#include <stdexcept>
#include <string>

namespace cip {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Blocks = OperatorBlocks<double>;

/// Weighted terms of the discrete QRM functional.
struct FunctionalValue {
  double pde = 0;             ///< h^2 |A v|^2
  double dirichlet = 0;       ///< h |D1 v - F|^2
  double neumann = 0;         ///< h |D2 v - G|^2
  double regularization = 0;  ///< eps h^2 (|v|^2 + |Dx v|^2 + |Dy v|^2)
  double total = 0;
};

FunctionalValue evaluate_functional(const Blocks& blocks, const Vector& v);

/// Normal matrix M and right-hand side b, so that J(v) = v'Mv - 2b'v + const
/// and grad J = 2 (M v - b).
struct NormalEquations {
  SparseMatrix matrix;
  Vector rhs;
};

NormalEquations normal_equations(const Blocks& blocks);

enum class SolverKind {
  direct,      ///< supernodal Cholesky, polished by factor-preconditioned CG
  jacobi_cg,   ///< conjugate gradients with a diagonal preconditioner
  automatic,   ///< direct below `direct_limit` unknowns, jacobi_cg above
};

struct SolverOptions {
  SolverKind kind = SolverKind::direct;
  double tolerance = 1e-8;  ///< on |M v - b| / |b|
  int max_iterations = 20000;
  Eigen::Index direct_limit = 20000;
  /// Refinement steps allowed with a reused factor before refactoring.
  int reuse_iterations = 40;
};

struct QrmSolution {
  Vector v;
  FunctionalValue functional;
  double residual_pde = 0;  ///< unweighted block residual norms
  double residual_dirichlet = 0;
  double residual_neumann = 0;
  double normal_residual = 0;
  int iterations = 0;
  bool factorized = false;  ///< a fresh factorization was computed
  double seconds = 0;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, Vector best, double residual)
      : std::runtime_error(what), best_(std::move(best)), residual_(residual) {}
  const Vector& best_iterate() const { return best_; }
  double residual() const { return residual_; }

 private:
  Vector best_;
  double residual_;
};

/// Minimizer of the QRM functional for a given set of blocks. The solver
/// keeps its last factorization; with `reuse` set, a later solve whose
/// normal matrix shares the sparsity pattern uses that factor as a CG
/// preconditioner and only refactors when CG stalls.
class QrmSolver {
 public:
  explicit QrmSolver(SolverOptions options = {});
  ~QrmSolver();
  QrmSolver(QrmSolver&&) noexcept;
  QrmSolver& operator=(QrmSolver&&) noexcept;

  QrmSolution solve(const Blocks& blocks, bool reuse = false);
  void release();

  const SolverOptions& options() const { return options_; }

 private:
  struct Factor;
  SolverOptions options_;
  std::unique_ptr<Factor> factor_;
};

/// One-shot solve with a fresh solver.
QrmSolution solve(const Blocks& blocks, const SolverOptions& options = {});

/// Unweighted residual norms and functional at v.
void fill_diagnostics(const Blocks& blocks, QrmSolution& solution);

}  // namespace cip
