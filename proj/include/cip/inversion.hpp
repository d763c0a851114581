#pragma once

#include "cip/elliptic_system.hpp"
#include "cip/fourier_data.hpp"
#include "cip/qrm_solver.hpp"
#include "cip/time_basis.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace cip {

using Field = ScalarField<double>;
using Modes = ModeField<double>;
using FourierData = FourierBoundaryData<double>;
using Basis = TimeBasis<double>;

struct ReconstructionConfig {
  double epsilon = 1e-9;
  int max_iterations = 10;  ///< p_max: correctors after the predictor
  double stop_tol = 1e-3;   ///< on the relative change E(p); 0 runs to p_max
  /// Below this sup norm of c^(p+1), E(p) falls back to the absolute change.
  double absolute_floor = 1e-8;
  /// Correctors precondition with the previous factorization when possible.
  bool reuse_factor = true;
  SolverOptions solver;
};

/// One QRM solve of the iteration; p = 0 is the predictor.
struct IterationRecord {
  int p = 0;
  Field c;
  QrmSolution solve;  ///< solve.v is dropped from history to save memory
  std::optional<double> change;  ///< E(p - 1), set from p = 1 on
  bool absolute_change = false;
};

struct ReconstructionResult {
  Field c;
  Modes v;
  std::vector<IterationRecord> history;
  bool converged = false;  ///< stopped on stop_tol rather than p_max

  /// E(0), E(1), ... in order.
  std::vector<double> changes() const;
};

Modes predictor(const FourierData& data, const Field& f, const Basis& basis, const ReconstructionConfig& cfg,
                QrmSolution* diagnostics = nullptr);

Modes corrector(const Modes& previous, const FourierData& data, const Field& f, const Basis& basis,
                const ReconstructionConfig& cfg, QrmSolution* diagnostics = nullptr);

/// c = (sum_n V_n psi_n(0) - Lap_h f) / f at every node.
Field extract_c(const Modes& v, const Basis& basis, const Field& f);

/// Sup-norm relative change |a - b|_inf / |b|_inf with the absolute fallback.
std::pair<double, bool> relative_change(const Field& a, const Field& b, double absolute_floor);

/// Predictor, then correctors until E(p) < stop_tol or p_max correctors.
/// `observer` sees each record as soon as it is complete.
ReconstructionResult reconstruct(const FourierData& data, const Field& f, const Basis& basis,
                                 const ReconstructionConfig& cfg,
                                 const std::function<void(const IterationRecord&)>& observer = {});

}  // namespace cip
