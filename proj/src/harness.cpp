#include "cip/harness.hpp"

#include "cip/forward_sim.hpp"
#include "cip/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace cip {

namespace {

double one(double, double) { return 1; }

double test1(double x, double y) {
  const double r2 = x * x + (y + 0.3) * (y + 0.3);
  const double a2 = 0.23 * 0.23;
  return r2 < a2 ? 20 * std::exp(r2 / (r2 - a2)) : 0;
}

double test2(double x, double y) {
  const bool bar = std::abs(y - 0.4) < 0.15 || std::abs(y + 0.4) < 0.15;
  return std::abs(x) < 0.8 && bar ? 10 : 0;
}

double test3(double x, double y) {
  const double a2 = 0.23 * 0.23;
  if (x * x + (y + 0.5) * (y + 0.5) < a2) return 5;
  if (x * x + (y - 0.5) * (y - 0.5) < a2) return 8;
  return 0;
}

double test4(double x, double y) {
  const bool arms = std::abs(x) < 0.8 && (std::abs(x + y) < 0.25 || std::abs(x - y) < 0.25);
  if (!arms) return 0;
  if (-0.8 < y && y <= 0) return 8;
  if (0 < y && y < 0.8) return -8;
  return 0;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("stage '") + name + "' failed: " + e.what());
  }
}

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw std::invalid_argument("not a boolean: '" + v + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

SolverKind solver_kind(const std::string& name) {
  if (name == "direct") return SolverKind::direct;
  if (name == "jacobi-cg") return SolverKind::jacobi_cg;
  if (name == "auto") return SolverKind::automatic;
  throw std::invalid_argument("unknown solver '" + name + "' (direct, jacobi-cg, auto)");
}

nlohmann::json point_json(const Point& p) { return {p.x, p.y}; }

}  // namespace

const std::vector<TestCase>& test_cases() {
  static const std::vector<TestCase> cases = {
      {"test1", "smooth bump of height 20 and radius 0.23 at (0, -0.3)", test1, one, {{0, -0.3}}, 0.35, 19.07, {}},
      {"test2", "two bars of height 10, |x| < 0.8 and |y -+ 0.4| < 0.15", test2, one, {}, 0, 10.98, {}},
      {"test3", "discs of radius 0.23: 5 at (0, -0.5), 8 at (0, 0.5)", test3, one, {{0, -0.5}, {0, 0.5}}, 0.35,
       8.90, {}},
      {"test4", "letter X, +8 on the lower arms and -8 on the upper arms", test4, one, {}, 0, 8.90, -7.93},
      {"zero", "c = 0", [](double, double) { return 0.0; }, one, {}, 0, {}, {}},
  };
  return cases;
}

const TestCase& find_case(const std::string& name) {
  for (const auto& c : test_cases())
    if (c.name == name) return c;
  throw std::invalid_argument("unknown test case '" + name + "'");
}

Field evaluate_true_coefficient(const TestCase& test, const SpaceGrid<double>& grid) {
  return sample_field(grid, test.coefficient);
}

Field evaluate_initial(const TestCase& test, const SpaceGrid<double>& grid) {
  return sample_field(grid, test.initial);
}

void RunConfig::set(const std::string& key, const std::string& value) {
  try {
    if (key == "case") case_name = value;
    else if (key == "R") half_width = std::stod(value);
    else if (key == "R1") sim_half_width = std::stod(value);
    else if (key == "Nx") nodes = std::stol(value);
    else if (key == "N1") sim_nodes = std::stol(value);
    else if (key == "Nt") time_nodes = std::stol(value);
    else if (key == "T") final_time = std::stod(value);
    else if (key == "N") order = std::stoi(value);
    else if (key == "epsilon") epsilon = std::stod(value);
    else if (key == "delta") noise = std::stod(value);
    else if (key == "seed") seed = std::stoull(value);
    else if (key == "p_max") max_iterations = std::stoi(value);
    else if (key == "stop_tol") stop_tol = std::stod(value);
    else if (key == "solver") solver = value;
    else if (key == "out") out_dir = value;
    else if (key == "write_iterations") write_iterations = parse_bool(value);
    else throw std::invalid_argument("unknown key");
  } catch (const std::exception& e) {
    throw std::invalid_argument("config '" + key + " = " + value + "': " + e.what());
  }
}

void RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path.string() + ":" + std::to_string(number) + ": expected key = value");
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void RunConfig::validate() const {
  find_case(case_name);
  if (!(half_width > 0) || !(sim_half_width > 0) || !(final_time > 0) || !(epsilon > 0))
    throw std::invalid_argument("R, R1, T and epsilon must be positive");
  if (nodes < 3 || sim_nodes < 3 || time_nodes < 2 || order < 1 || order > kMaxBasisOrder)
    throw std::invalid_argument("grid sizes or N out of range");
  const double h1 = 2 * sim_half_width / double(sim_nodes - 1);
  if (!(half_width + h1 < sim_half_width - h1))
    throw std::invalid_argument("the inversion square must lie strictly inside the simulation square");
  if (!(noise >= 0)) throw std::invalid_argument("delta must be non-negative");
  if (max_iterations < 1) throw std::invalid_argument("p_max must be at least 1");
  solver_kind(solver);
}

ReconstructionConfig RunConfig::reconstruction() const {
  ReconstructionConfig rc;
  rc.epsilon = epsilon;
  rc.max_iterations = max_iterations;
  rc.stop_tol = stop_tol;
  rc.solver.kind = solver_kind(solver);
  return rc;
}

nlohmann::json RunConfig::to_json() const {
  return {{"case", case_name}, {"R", half_width},     {"R1", sim_half_width}, {"Nx", nodes},
          {"N1", sim_nodes},   {"Nt", time_nodes},    {"T", final_time},      {"N", order},
          {"epsilon", epsilon}, {"delta", noise},     {"seed", seed},         {"p_max", max_iterations},
          {"stop_tol", stop_tol}, {"solver", solver}};
}

Metrics compute_metrics(const Field& computed, const Field& truth, const TestCase* test) {
  if (!(computed.grid == truth.grid)) throw std::invalid_argument("compute_metrics: fields on different grids");
  const auto& g = computed.grid;
  Metrics m;
  Eigen::Index i, j;
  m.computed_max = computed.values.maxCoeff(&i, &j);
  m.argmax = {g.coordinate(i), g.coordinate(j)};
  m.computed_min = computed.values.minCoeff(&i, &j);
  m.argmin = {g.coordinate(i), g.coordinate(j)};
  m.true_max = truth.values.maxCoeff();
  m.true_min = truth.values.minCoeff();

  m.max_error_absolute = m.true_max == 0;
  m.max_error = std::abs(m.computed_max - m.true_max) / (m.max_error_absolute ? 1 : std::abs(m.true_max));
  if (m.true_min < 0) m.min_error = std::abs(m.computed_min - m.true_min) / std::abs(m.true_min);
  const double tnorm = truth.values.norm();
  m.l2_error = (computed.values - truth.values).norm() / (tnorm > 0 ? tnorm : 1);

  if (test) {
    for (const Point& c : test->centers) {
      InclusionMetric inc{c, -INFINITY, -INFINITY, 0};
      for (Eigen::Index a = 0; a < g.nodes(); ++a)
        for (Eigen::Index b = 0; b < g.nodes(); ++b) {
          const double dx = g.coordinate(a) - c.x, dy = g.coordinate(b) - c.y;
          if (dx * dx + dy * dy > test->center_radius * test->center_radius) continue;
          inc.true_peak = std::max(inc.true_peak, truth(a, b));
          inc.computed_peak = std::max(inc.computed_peak, computed(a, b));
        }
      inc.relative_error = std::abs(inc.computed_peak - inc.true_peak) / std::abs(inc.true_peak);
      m.inclusions.push_back(inc);
    }
  }
  return m;
}

nlohmann::json to_json(const Metrics& m) {
  nlohmann::json j = {{"true_max", m.true_max},
                      {"true_min", m.true_min},
                      {"computed_max", m.computed_max},
                      {"computed_min", m.computed_min},
                      {"argmax", point_json(m.argmax)},
                      {"argmin", point_json(m.argmin)},
                      {"max_error", m.max_error},
                      {"max_error_absolute", m.max_error_absolute},
                      {"min_error", m.min_error ? nlohmann::json(*m.min_error) : nlohmann::json()},
                      {"l2_error", m.l2_error}};
  j["inclusions"] = nlohmann::json::array();
  for (const auto& inc : m.inclusions)
    j["inclusions"].push_back({{"center", point_json(inc.center)},
                               {"true_peak", inc.true_peak},
                               {"computed_peak", inc.computed_peak},
                               {"relative_error", inc.relative_error}});
  return j;
}

BoundaryTimeSeries<double> simulate(const RunConfig& cfg, const TestCase& test) {
  const auto sim = cfg.sim_grid();
  const auto solution =
      solve_forward(evaluate_true_coefficient(test, sim), evaluate_initial(test, sim), cfg.time_grid());
  return extract_cauchy(solution, cfg.grid());
}

nlohmann::json RunReport::to_json() const {
  nlohmann::json history = nlohmann::json::array();
  for (const auto& rec : result.history) {
    const auto& s = rec.solve;
    history.push_back({{"p", rec.p},
                       {"change", rec.change ? nlohmann::json(*rec.change) : nlohmann::json()},
                       {"absolute_change", rec.absolute_change},
                       {"c_max", rec.c.values.maxCoeff()},
                       {"c_min", rec.c.values.minCoeff()},
                       {"functional",
                        {{"pde", s.functional.pde},
                         {"dirichlet", s.functional.dirichlet},
                         {"neumann", s.functional.neumann},
                         {"regularization", s.functional.regularization},
                         {"total", s.functional.total}}},
                       {"residual_pde", s.residual_pde},
                       {"residual_dirichlet", s.residual_dirichlet},
                       {"residual_neumann", s.residual_neumann},
                       {"normal_residual", s.normal_residual},
                       {"solver_iterations", s.iterations},
                       {"factorized", s.factorized},
                       {"seconds", s.seconds}});
  }
  return {{"config", config.to_json()},
          {"seed", config.seed},
          {"metrics", cip::to_json(metrics)},
          {"converged", result.converged},
          {"iterations", int(result.history.size()) - 1},
          {"history", history},
          {"timings",
           {{"simulate", simulate_seconds}, {"project", project_seconds}, {"reconstruct", reconstruct_seconds}}}};
}

namespace {

void write_outputs(const RunReport& report, const FourierData* data) {
  const auto& dir = report.config.out_dir;
  if (dir.empty()) return;
  std::filesystem::create_directories(dir);
  write_file(dir / "report.json", [&](std::ostream& o) { o << report.to_json().dump(2) << '\n'; });
  write_file(dir / "c_comp.csv", [&](std::ostream& o) { write_field_csv(o, report.result.c); });
  write_file(dir / "c_true.csv", [&](std::ostream& o) { write_field_csv(o, report.truth); });
  if (data) write_file(dir / "fourier.csv", [&](std::ostream& o) { write_fourier_csv(o, *data); });
  if (report.config.write_iterations)
    for (const auto& rec : report.result.history)
      write_file(dir / ("c_p" + std::to_string(rec.p) + ".csv"), [&](std::ostream& o) { write_field_csv(o, rec.c); });
}

RunReport finish(const RunConfig& cfg, const FourierData& data,
                 const std::function<void(const IterationRecord&)>& observer) {
  const TestCase& test = find_case(cfg.case_name);
  const auto grid = data.grid;
  const Basis basis(cfg.final_time, cfg.order);
  const Field f = evaluate_initial(test, grid);
  const auto start = Clock::now();
  ReconstructionResult result = stage("reconstruct", [&] { return reconstruct(data, f, basis, cfg.reconstruction(), observer); });
  const double elapsed = seconds_since(start);
  Field truth = evaluate_true_coefficient(test, grid);
  Metrics metrics = stage("metrics", [&] { return compute_metrics(result.c, truth, &test); });
  return RunReport{cfg, std::move(metrics), std::move(result), std::move(truth), 0, 0, elapsed};
}

}  // namespace

RunReport invert(const RunConfig& cfg, const FourierData& data,
                 const std::function<void(const IterationRecord&)>& observer) {
  cfg.validate();
  RunReport report = finish(cfg, data, observer);
  write_outputs(report, nullptr);
  return report;
}

RunReport run_pipeline(const RunConfig& cfg, const std::function<void(const IterationRecord&)>& observer) {
  cfg.validate();
  const TestCase& test = find_case(cfg.case_name);
  auto start = Clock::now();
  const auto series = stage("simulate", [&] { return simulate(cfg, test); });
  const double simulate_seconds = seconds_since(start);

  start = Clock::now();
  const FourierData data = stage("project", [&] {
    const Basis basis(cfg.final_time, cfg.order);
    return add_noise(project(series, basis), cfg.noise, cfg.seed);
  });
  const double project_seconds = seconds_since(start);

  RunReport report = finish(cfg, data, observer);
  report.simulate_seconds = simulate_seconds;
  report.project_seconds = project_seconds;
  write_outputs(report, &data);
  return report;
}

std::vector<TruncationRow> truncation_study(const RunConfig& cfg, const std::vector<int>& orders) {
  cfg.validate();
  if (orders.empty()) return {};
  const int top = *std::max_element(orders.begin(), orders.end());
  if (*std::min_element(orders.begin(), orders.end()) < 1 || top > kMaxBasisOrder)
    throw std::invalid_argument("truncation_study: orders must lie in [1, " + std::to_string(kMaxBasisOrder) + "]");

  const TestCase& test = find_case(cfg.case_name);
  const auto sim = cfg.sim_grid();
  const auto time = cfg.time_grid();
  const auto solution = solve_forward(evaluate_true_coefficient(test, sim), evaluate_initial(test, sim), time);

  // u(x_i, y_j, t_l) on the inversion grid, one row per node.
  const auto grid = cfg.grid();
  const Eigen::Index n = grid.nodes();
  Eigen::MatrixXd u(n * n, time.size());
  for (Eigen::Index l = 0; l < time.size(); ++l)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        u(i * n + j, l) =
            interpolate_bilinear(sim, solution.snapshots[std::size_t(l)], grid.coordinate(i), grid.coordinate(j));

  const Basis basis(cfg.final_time, top);
  const Eigen::MatrixXd modes = u * projection_weights(basis, time).transpose();
  const Eigen::VectorXd v_end = u * interpolant_derivative_weights(time, cfg.final_time);
  std::vector<TruncationRow> rows;
  for (int order : orders) {
    const Eigen::VectorXd partial = modes.leftCols(order) * basis.psiT().head(order);
    rows.push_back({order, (v_end - partial).cwiseAbs().maxCoeff()});
  }
  return rows;
}

}  // namespace cip
