// Command-line front end: simulate data, invert it, or run both.
#include "cip/harness.hpp"
#include "cip/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

struct Common {
  std::string config;
  std::optional<std::string> case_name;
  std::optional<double> noise;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> iters;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "key = value file")->check(CLI::ExistingFile);
  app->add_option("--case", c.case_name, "test case (see list-cases)");
  app->add_option("--noise", c.noise, "noise level delta");
  app->add_option("--seed", c.seed, "noise seed");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--iters", c.iters, "maximal number of corrector iterations (p_max)");
  app->add_option("--set", c.overrides, "extra key=value setting, repeatable");
}

cip::RunConfig make_config(const Common& c) {
  cip::RunConfig cfg;
  if (!c.config.empty()) cfg.load(c.config);
  if (c.case_name) cfg.case_name = *c.case_name;
  if (c.noise) cfg.noise = *c.noise;
  if (c.seed) cfg.seed = *c.seed;
  if (c.out) cfg.out_dir = *c.out;
  if (c.iters) cfg.max_iterations = *c.iters;
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

void progress(const cip::IterationRecord& rec) {
  std::fprintf(stderr, "p=%2d  max c=%9.4f  min c=%9.4f", rec.p, rec.c.values.maxCoeff(), rec.c.values.minCoeff());
  if (rec.change) std::fprintf(stderr, "  E(%d)=%.3e%s", rec.p - 1, *rec.change, rec.absolute_change ? " (abs)" : "");
  std::fprintf(stderr, "  solve %.1fs, %d cg%s\n", rec.solve.seconds, rec.solve.iterations,
               rec.solve.factorized ? ", factorized" : "");
}

void summarize(const cip::RunReport& report) {
  const auto& m = report.metrics;
  std::printf("case %s  delta %g  seed %llu\n", report.config.case_name.c_str(), report.config.noise,
              static_cast<unsigned long long>(report.config.seed));
  std::printf("max c_comp %.4f at (%.3f, %.3f), true %.4f, error %.2f%%%s\n", m.computed_max, m.argmax.x, m.argmax.y,
              m.true_max, 100 * m.max_error, m.max_error_absolute ? " (absolute)" : "");
  if (m.min_error)
    std::printf("min c_comp %.4f at (%.3f, %.3f), true %.4f, error %.2f%%\n", m.computed_min, m.argmin.x, m.argmin.y,
                m.true_min, 100 * *m.min_error);
  for (const auto& inc : m.inclusions)
    std::printf("inclusion at (%.2f, %.2f): peak %.4f, true %.4f, error %.2f%%\n", inc.center.x, inc.center.y,
                inc.computed_peak, inc.true_peak, 100 * inc.relative_error);
  std::printf("relative L2 error %.4f, %zu iterates, %s\n", m.l2_error, report.result.history.size(),
              report.result.converged ? "stopped on tolerance" : "stopped at p_max");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coefficient recovery for u_t = Lap u + c u from lateral Cauchy data"};
  app.require_subcommand(1);

  Common run_opts, sim_opts, inv_opts, trunc_opts;
  auto* run = app.add_subcommand("run", "simulate, add noise and reconstruct");
  add_common(run, run_opts);

  auto* sim = app.add_subcommand("simulate", "forward solve; writes boundary series and Fourier data");
  add_common(sim, sim_opts);

  auto* inv = app.add_subcommand("invert", "reconstruct from a Fourier data file");
  add_common(inv, inv_opts);
  std::string data_path;
  inv->add_option("--data", data_path, "Fourier data CSV written by simulate")->required()->check(CLI::ExistingFile);

  auto* trunc = app.add_subcommand("truncation-study", "sup error of the truncated expansion of u_t at T");
  add_common(trunc, trunc_opts);
  std::vector<int> orders{5, 10, 25};
  trunc->add_option("--orders", orders, "truncation orders");

  auto* list = app.add_subcommand("list-cases", "print the registered test cases");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*list) {
      for (const auto& c : cip::test_cases()) std::printf("%-6s %s\n", c.name.c_str(), c.description.c_str());
    } else if (*run) {
      summarize(cip::run_pipeline(make_config(run_opts), progress));
    } else if (*sim) {
      const auto cfg = make_config(sim_opts);
      const auto series = cip::simulate(cfg, cip::find_case(cfg.case_name));
      const cip::Basis basis(cfg.final_time, cfg.order);
      const auto data = cip::add_noise(cip::project(series, basis), cfg.noise, cfg.seed);
      const auto dir = cfg.out_dir.empty() ? std::filesystem::path(".") : cfg.out_dir;
      cip::write_file(dir / "series.csv", [&](std::ostream& o) { cip::write_boundary_series_csv(o, series); });
      cip::write_file(dir / "fourier.csv", [&](std::ostream& o) { cip::write_fourier_csv(o, data); });
      std::printf("wrote %s and %s\n", (dir / "series.csv").c_str(), (dir / "fourier.csv").c_str());
    } else if (*inv) {
      auto cfg = make_config(inv_opts);
      std::ifstream in(data_path);
      const auto data = cip::read_fourier_csv(in);
      cfg.order = data.order();
      cfg.final_time = data.final_time;
      cfg.noise = data.noise_level;
      cfg.seed = data.seed;
      cfg.nodes = data.grid.nodes();
      cfg.half_width = data.grid.half_width();
      summarize(cip::invert(cfg, data, progress));
    } else if (*trunc) {
      const auto cfg = make_config(trunc_opts);
      const auto rows = cip::truncation_study(cfg, orders);
      std::printf("N,sup_error\n");
      for (const auto& r : rows) std::printf("%d,%.6e\n", r.order, r.sup_error);
      if (!cfg.out_dir.empty())
        cip::write_file(cfg.out_dir / "truncation.csv", [&](std::ostream& o) {
          o << "N,sup_error\n";
          for (const auto& r : rows) o << r.order << ',' << r.sup_error << '\n';
        });
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
