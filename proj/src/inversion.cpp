#include "cip/inversion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cip {

std::vector<double> ReconstructionResult::changes() const {
  std::vector<double> out;
  for (const auto& rec : history)
    if (rec.change) out.push_back(*rec.change);
  return out;
}

namespace {

void check_inputs(const FourierData& data, const Field& f, const Basis& basis) {
  if (data.order() != basis.order())
    throw std::invalid_argument("reconstruction: data carry " + std::to_string(data.order()) +
                                " modes but the basis has " + std::to_string(basis.order()));
  if (!(data.grid == f.grid)) throw std::invalid_argument("reconstruction: f and data live on different grids");
  if (std::abs(data.final_time - basis.final_time()) > 1e-12 * basis.final_time())
    throw std::invalid_argument("reconstruction: data and basis use different final times");
}

Modes solve_modes(QrmSolver& solver, const FourierData& data, const Field& f, const Basis& basis,
                  const ReconstructionConfig& cfg, const Modes* previous, bool reuse, QrmSolution* diagnostics) {
  const Blocks blocks = assemble_system(f, basis, data, cfg.epsilon, previous);
  QrmSolution sol = solver.solve(blocks, reuse);
  Modes v = to_modes(sol.v, blocks.map);
  if (diagnostics) *diagnostics = std::move(sol);
  return v;
}

}  // namespace

Modes predictor(const FourierData& data, const Field& f, const Basis& basis, const ReconstructionConfig& cfg,
                QrmSolution* diagnostics) {
  check_inputs(data, f, basis);
  QrmSolver solver(cfg.solver);
  return solve_modes(solver, data, f, basis, cfg, nullptr, false, diagnostics);
}

Modes corrector(const Modes& previous, const FourierData& data, const Field& f, const Basis& basis,
                const ReconstructionConfig& cfg, QrmSolution* diagnostics) {
  check_inputs(data, f, basis);
  QrmSolver solver(cfg.solver);
  return solve_modes(solver, data, f, basis, cfg, &previous, false, diagnostics);
}

Field extract_c(const Modes& v, const Basis& basis, const Field& f) {
  const Eigen::Index n = f.grid.nodes();
  if (v.rows() != n * n || v.cols() != basis.order())
    throw std::invalid_argument("extract_c: mode field shape does not match grid and basis");
  detail::check_nonvanishing(f);
  const Field lap = laplacian(f);
  const Eigen::VectorXd v0 = v * basis.psi0();
  Field c(f.grid);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) c(i, j) = (v0(i * n + j) - lap(i, j)) / f(i, j);
  return c;
}

std::pair<double, bool> relative_change(const Field& a, const Field& b, double absolute_floor) {
  const double diff = (a.values - b.values).cwiseAbs().maxCoeff();
  const double scale = b.values.cwiseAbs().maxCoeff();
  if (scale < absolute_floor) return {diff, true};
  return {diff / scale, false};
}

ReconstructionResult reconstruct(const FourierData& data, const Field& f, const Basis& basis,
                                 const ReconstructionConfig& cfg,
                                 const std::function<void(const IterationRecord&)>& observer) {
  check_inputs(data, f, basis);
  if (cfg.max_iterations < 1) throw std::invalid_argument("reconstruct: p_max must be at least 1");
  if (!(cfg.epsilon > 0)) throw std::invalid_argument("reconstruct: epsilon must be positive");

  QrmSolver solver(cfg.solver);
  std::vector<IterationRecord> history;
  bool converged = false;
  const auto record = [&](int p, const Modes& v, QrmSolution&& sol) {
    IterationRecord rec{p, extract_c(v, basis, f), std::move(sol), std::nullopt, false};
    rec.solve.v.resize(0);
    if (!history.empty()) {
      const auto [change, absolute] = relative_change(history.back().c, rec.c, cfg.absolute_floor);
      rec.change = change;
      rec.absolute_change = absolute;
    }
    history.push_back(std::move(rec));
    if (observer) observer(history.back());
  };

  QrmSolution sol;
  Modes v = solve_modes(solver, data, f, basis, cfg, nullptr, false, &sol);
  record(0, v, std::move(sol));
  for (int p = 1; p <= cfg.max_iterations; ++p) {
    Modes next = solve_modes(solver, data, f, basis, cfg, &v, cfg.reuse_factor, &sol);
    v = std::move(next);
    record(p, v, std::move(sol));
    if (*history.back().change < cfg.stop_tol) {
      converged = true;
      break;
    }
  }
  Field c = history.back().c;
  return {std::move(c), std::move(v), std::move(history), converged};
}

}  // namespace cip
