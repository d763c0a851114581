#pragma once

#include "cip/inversion.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cip {

struct Point {
  double x = 0;
  double y = 0;
};

/// A synthetic coefficient with the values a reconstruction is judged on.
struct TestCase {
  std::string name;
  std::string description;
  std::function<double(double, double)> coefficient;
  std::function<double(double, double)> initial;  ///< f
  /// Inclusion centers; metrics report the peak of c_comp near each one.
  std::vector<Point> centers;
  double center_radius = 0;
  /// Reference reconstructed extrema at delta = 0.1, for regression output.
  std::optional<double> reference_max;
  std::optional<double> reference_min;
};

const std::vector<TestCase>& test_cases();
const TestCase& find_case(const std::string& name);

Field evaluate_true_coefficient(const TestCase& test, const SpaceGrid<double>& grid);
Field evaluate_initial(const TestCase& test, const SpaceGrid<double>& grid);

struct RunConfig {
  std::string case_name = "test1";
  double half_width = 1;             ///< R
  double sim_half_width = 3;         ///< R1
  Eigen::Index nodes = 80;           ///< N_x
  Eigen::Index sim_nodes = 240;      ///< N_1
  Eigen::Index time_nodes = 100;     ///< N_t
  double final_time = 0.3;           ///< T
  int order = 25;                    ///< N
  double epsilon = 1e-9;
  double noise = 0;                  ///< delta
  std::uint64_t seed = 1;
  int max_iterations = 10;
  double stop_tol = 1e-3;
  std::string solver = "direct";     ///< direct | jacobi-cg | auto
  std::filesystem::path out_dir;     ///< empty: nothing written
  bool write_iterations = false;     ///< c^(p) CSV per iterate

  /// Applies one `key = value` setting; unknown keys throw.
  void set(const std::string& key, const std::string& value);
  /// Reads a flat key = value file; `#` starts a comment.
  void load(const std::filesystem::path& path);
  void validate() const;

  SpaceGrid<double> grid() const { return {half_width, nodes}; }
  SpaceGrid<double> sim_grid() const { return {sim_half_width, sim_nodes}; }
  TimeGrid<double> time_grid() const { return {final_time, time_nodes}; }
  ReconstructionConfig reconstruction() const;
  nlohmann::json to_json() const;
};

struct InclusionMetric {
  Point center;
  double true_peak = 0;
  double computed_peak = 0;
  double relative_error = 0;
};

struct Metrics {
  double true_max = 0, true_min = 0;
  double computed_max = 0, computed_min = 0;
  Point argmax, argmin;
  double max_error = 0;  ///< |max c_comp - max c_true| / |max c_true|, absolute if max c_true = 0
  std::optional<double> min_error;  ///< the same for the minimum, when min c_true < 0
  bool max_error_absolute = false;
  double l2_error = 0;  ///< |c_comp - c_true|_2 / |c_true|_2, absolute if c_true = 0
  std::vector<InclusionMetric> inclusions;
};

Metrics compute_metrics(const Field& computed, const Field& truth, const TestCase* test = nullptr);
nlohmann::json to_json(const Metrics& m);

/// Noiseless lateral Cauchy data of the case, sampled on the inversion
/// boundary.
BoundaryTimeSeries<double> simulate(const RunConfig& cfg, const TestCase& test);

struct RunReport {
  RunConfig config;
  Metrics metrics;
  ReconstructionResult result;
  Field truth;
  double simulate_seconds = 0;
  double project_seconds = 0;
  double reconstruct_seconds = 0;

  nlohmann::json to_json() const;
};

/// simulate -> extract Cauchy data -> project -> noise -> reconstruct ->
/// metrics, writing report and fields under cfg.out_dir when set. Stage
/// failures are rethrown as std::runtime_error naming the stage.
RunReport run_pipeline(const RunConfig& cfg,
                       const std::function<void(const IterationRecord&)>& observer = {});

/// Inversion only, from precomputed Fourier data.
RunReport invert(const RunConfig& cfg, const FourierData& data,
                 const std::function<void(const IterationRecord&)>& observer = {});

struct TruncationRow {
  int order = 0;
  double sup_error = 0;
};

/// e_N = sup over the inversion grid of |v(., T) - sum_{n <= N} v_n psi_n(T)|
/// with v = u_t from a forward run of the case.
std::vector<TruncationRow> truncation_study(const RunConfig& cfg, const std::vector<int>& orders);

}  // namespace cip
