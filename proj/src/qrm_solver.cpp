#include "cip/qrm_solver.hpp"

#include <Eigen/CholmodSupport>
#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <vector>

namespace cip {

FunctionalValue evaluate_functional(const Blocks& blocks, const Vector& v) {
  if (v.size() != blocks.map.size()) throw std::invalid_argument("evaluate_functional: size mismatch");
  FunctionalValue out;
  out.pde = blocks.w_pde * (blocks.interior * v).squaredNorm();
  out.dirichlet = blocks.w_bdy * (blocks.dirichlet * v - blocks.data_dirichlet).squaredNorm();
  out.neumann = blocks.w_bdy * (blocks.neumann * v - blocks.data_neumann).squaredNorm();
  out.regularization = blocks.epsilon * blocks.w_pde *
                       (v.squaredNorm() + (blocks.grad_x * v).squaredNorm() + (blocks.grad_y * v).squaredNorm());
  out.total = out.pde + out.dirichlet + out.neumann + out.regularization;
  return out;
}

NormalEquations normal_equations(const Blocks& blocks) {
  const auto gram = [](const Blocks::SpMat& a) {
    const SparseMatrix col = a;
    const SparseMatrix t = col.transpose();
    return SparseMatrix(t * col);
  };
  const Eigen::Index size = blocks.map.size();
  SparseMatrix identity(size, size);
  identity.setIdentity();

  NormalEquations ne;
  ne.matrix = blocks.w_pde * gram(blocks.interior);
  ne.matrix += blocks.w_bdy * (gram(blocks.dirichlet) + gram(blocks.neumann));
  ne.matrix += (blocks.epsilon * blocks.w_pde) * (identity + gram(blocks.grad_x) + gram(blocks.grad_y));
  ne.matrix.makeCompressed();
  ne.rhs = blocks.w_bdy * (blocks.dirichlet.transpose() * blocks.data_dirichlet +
                           blocks.neumann.transpose() * blocks.data_neumann);
  return ne;
}

void fill_diagnostics(const Blocks& blocks, QrmSolution& solution) {
  const Vector& v = solution.v;
  solution.functional = evaluate_functional(blocks, v);
  solution.residual_pde = (blocks.interior * v).norm();
  solution.residual_dirichlet = (blocks.dirichlet * v - blocks.data_dirichlet).norm();
  solution.residual_neumann = (blocks.neumann * v - blocks.data_neumann).norm();
}

struct QrmSolver::Factor {
  Eigen::CholmodSupernodalLLT<SparseMatrix, Eigen::Lower> llt;
  std::vector<SparseMatrix::StorageIndex> outer, inner;
  bool analyzed = false;
  bool valid = false;

  bool same_pattern(const SparseMatrix& m) const {
    return analyzed && Eigen::Index(outer.size()) == m.outerSize() + 1 &&
           Eigen::Index(inner.size()) == m.nonZeros() &&
           std::equal(outer.begin(), outer.end(), m.outerIndexPtr()) &&
           std::equal(inner.begin(), inner.end(), m.innerIndexPtr());
  }

  void factorize(const SparseMatrix& m) {
    valid = false;
    if (!same_pattern(m)) {
      llt.analyzePattern(m);
      outer.assign(m.outerIndexPtr(), m.outerIndexPtr() + m.outerSize() + 1);
      inner.assign(m.innerIndexPtr(), m.innerIndexPtr() + m.nonZeros());
      analyzed = true;
    }
    llt.factorize(m);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("QrmSolver: Cholesky factorization of the normal matrix failed");
    valid = true;
  }
};

QrmSolver::QrmSolver(SolverOptions options) : options_(options) {}
QrmSolver::~QrmSolver() = default;
QrmSolver::QrmSolver(QrmSolver&&) noexcept = default;
QrmSolver& QrmSolver::operator=(QrmSolver&&) noexcept = default;

void QrmSolver::release() { factor_.reset(); }

namespace {

struct CgResult {
  Vector x;
  double residual;
  int iterations;
  bool converged;
};

// Preconditioned CG on M x = b from x0, with the true residual recomputed at
// every step; returns the iterate of smallest residual. With `give_up` set,
// stops early once the observed contraction rate cannot reach `tol` within
// `cap` steps.
template <typename Precond>
CgResult pcg(const SparseMatrix& m, const Vector& b, Vector x, Precond&& apply, double tol, int cap,
             bool give_up = false) {
  const double bnorm = b.norm();
  Vector r = b - m * x;
  CgResult best{x, r.norm() / bnorm, 0, false};
  const double initial = best.residual;
  if (best.residual <= tol) {
    best.converged = true;
    return best;
  }
  Vector z = apply(r);
  Vector p = z;
  double rz = r.dot(z);
  for (int it = 1; it <= cap; ++it) {
    const Vector q = m * p;
    const double alpha = rz / p.dot(q);
    x += alpha * p;
    r = b - m * x;
    const double res = r.norm() / bnorm;
    if (res < best.residual) best = {x, res, it, false};
    if (res <= tol) {
      best.converged = true;
      best.iterations = it;
      return best;
    }
    if (give_up && it >= 6) {
      const double rate = std::pow(res / initial, 1.0 / it);
      if (rate >= 1 || it + std::log(tol / res) / std::log(rate) > cap) {
        best.iterations = it;
        return best;
      }
    }
    z = apply(r);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  best.iterations = cap;
  return best;
}

}  // namespace

QrmSolution QrmSolver::solve(const Blocks& blocks, bool reuse) {
  const auto start = std::chrono::steady_clock::now();
  const Eigen::Index size = blocks.map.size();
  if (blocks.interior.rows() != size || blocks.dirichlet.rows() != size || blocks.neumann.rows() != size ||
      blocks.grad_x.rows() != size || blocks.grad_y.rows() != size || blocks.data_dirichlet.size() != size ||
      blocks.data_neumann.size() != size)
    throw std::invalid_argument("QrmSolver: block dimensions are inconsistent");
  if (!(blocks.epsilon > 0)) throw std::invalid_argument("QrmSolver: regularization weight must be positive");
  if (!blocks.data_dirichlet.allFinite() || !blocks.data_neumann.allFinite())
    throw std::invalid_argument("QrmSolver: non-finite boundary data");

  NormalEquations ne = normal_equations(blocks);
  for (Eigen::Index k = 0; k < ne.matrix.nonZeros(); ++k)
    if (!std::isfinite(ne.matrix.valuePtr()[k])) throw std::invalid_argument("QrmSolver: non-finite operator entry");

  QrmSolution out;
  const double bnorm = ne.rhs.norm();
  if (bnorm == 0) {
    out.v = Vector::Zero(size);
  } else {
    SolverKind kind = options_.kind;
    if (kind == SolverKind::automatic)
      kind = size < options_.direct_limit ? SolverKind::direct : SolverKind::jacobi_cg;

    if (kind == SolverKind::jacobi_cg) {
      Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
      cg.setTolerance(options_.tolerance);
      cg.setMaxIterations(options_.max_iterations);
      cg.compute(ne.matrix);
      out.v = cg.solve(ne.rhs);
      out.iterations = int(cg.iterations());
      if (cg.info() != Eigen::Success) {
        const double res = (ne.rhs - ne.matrix * out.v).norm() / bnorm;
        throw SolverError("QrmSolver: conjugate gradients reached " + std::to_string(out.iterations) +
                              " iterations at relative residual " + std::to_string(res),
                          out.v, res);
      }
    } else {
      const bool fresh = !(reuse && factor_ && factor_->valid && factor_->same_pattern(ne.matrix));
      if (!factor_) factor_ = std::make_unique<Factor>();
      if (fresh) {
        factor_->factorize(ne.matrix);
        out.factorized = true;
      }
      const auto apply = [this](const Vector& r) { return Vector(factor_->llt.solve(r)); };
      const int cap = fresh ? 50 : options_.reuse_iterations;
      CgResult cg = pcg(ne.matrix, ne.rhs, apply(ne.rhs), apply, options_.tolerance, cap, !fresh);
      out.iterations = cg.iterations;
      if (!cg.converged && !fresh) {
        factor_->factorize(ne.matrix);
        out.factorized = true;
        cg = pcg(ne.matrix, ne.rhs, cg.x, apply, options_.tolerance, 50);
        out.iterations += cg.iterations;
      }
      if (!cg.converged)
        throw SolverError("QrmSolver: refinement stalled at relative residual " + std::to_string(cg.residual), cg.x,
                          cg.residual);
      out.v = std::move(cg.x);
    }
  }
  if (!out.v.allFinite()) throw std::runtime_error("QrmSolver: non-finite solution");
  out.normal_residual = bnorm == 0 ? 0 : (ne.rhs - ne.matrix * out.v).norm() / bnorm;
  fill_diagnostics(blocks, out);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

QrmSolution solve(const Blocks& blocks, const SolverOptions& options) {
  QrmSolver solver(options);
  return solver.solve(blocks);
}

}  // namespace cip
