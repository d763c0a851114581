#include "cip/forward_sim.hpp"
#include "cip/grid.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using cip::SpaceGrid;
using cip::TimeGrid;
using Field = cip::ScalarField<double>;

namespace {

double bump(double x, double y) {
  const double r2 = x * x + (y + 0.3) * (y + 0.3);
  return r2 < 0.0529 ? 20 * std::exp(r2 / (r2 - 0.0529)) : 0;
}

// Sup error against u* = exp(-t) cos(pi x / 6) cos(pi y / 6) on [-3, 3]^2,
// c = 1 + x / 10, driven by the matching source.
double manufactured_error(Eigen::Index nodes, Eigen::Index steps) {
  const double k = std::numbers::pi / 6;
  const SpaceGrid<double> grid(3, nodes);
  const auto exact = [k](double x, double y, double t) { return std::exp(-t) * std::cos(k * x) * std::cos(k * y); };
  const auto c = cip::sample_field(grid, [](double x, double) { return 1 + x / 10; });
  const auto f = cip::sample_field(grid, [&](double x, double y) { return exact(x, y, 0); });
  cip::ForwardOptions<double> opts;
  opts.source = [&](double x, double y, double t) { return (-1 + 2 * k * k - (1 + x / 10)) * exact(x, y, t); };
  const TimeGrid<double> time(0.3, steps);
  const auto sol = cip::solve_forward(c, f, time, opts);
  double err = 0;
  for (Eigen::Index l = 0; l < time.size(); ++l)
    for (Eigen::Index i = 0; i < nodes; ++i)
      for (Eigen::Index j = 0; j < nodes; ++j)
        err = std::max(err, std::abs(sol.snapshots[std::size_t(l)](i, j) -
                                     exact(grid.coordinate(i), grid.coordinate(j), time.node(l))));
  return err;
}

// Forward Euler on the same grid, dt small enough for stability.
Eigen::MatrixXd explicit_final(const Field& c, const Field& f, double T, int steps) {
  const Eigen::Index n = f.grid.nodes();
  const double h = f.grid.spacing();
  const double dt = T / steps;
  Eigen::MatrixXd u = f.values, next = u;
  for (int s = 0; s < steps; ++s) {
    for (Eigen::Index i = 1; i + 1 < n; ++i)
      for (Eigen::Index j = 1; j + 1 < n; ++j)
        next(i, j) = u(i, j) + dt * ((u(i - 1, j) + u(i + 1, j) + u(i, j - 1) + u(i, j + 1) - 4 * u(i, j)) / (h * h) +
                                     c(i, j) * u(i, j));
    u = next;
  }
  return u;
}

}  // namespace

TEST_SUITE("forward_sim") {
  TEST_CASE("space grid") {
    const SpaceGrid<double> g(1, 80);
    CHECK(g.spacing() == doctest::Approx(2.0 / 79));
    CHECK(g.coordinate(0) == -1);
    CHECK(g.coordinate(79) == 1);
    CHECK(g.on_boundary(0, 5));
    CHECK(!g.on_boundary(3, 5));
    CHECK_THROWS_AS(SpaceGrid<double>(1, 2), std::invalid_argument);
  }

  TEST_CASE("discrete laplacian is exact on quadratics, including the boundary") {
    const SpaceGrid<double> g(1.5, 9);
    const auto q = cip::sample_field(g, [](double x, double y) { return 3 * x * x - y * y + x * y + 2 * x; });
    const auto lap = cip::laplacian(q);
    CHECK((lap.values.array() - 4).abs().maxCoeff() < 1e-10);
    CHECK(cip::laplacian(cip::constant_field(g, 1.0)).values.cwiseAbs().maxCoeff() == 0);
  }

  TEST_CASE("bilinear interpolation") {
    const SpaceGrid<double> g(2, 11);
    const auto b = cip::sample_field(g, [](double x, double y) { return 1 + 2 * x - y + 0.5 * x * y; });
    for (auto [x, y] : {std::pair{0.13, -1.7}, std::pair{2.0, 2.0}, std::pair{-2.0, 0.77}})
      CHECK(cip::interpolate_bilinear(g, b.values, x, y) == doctest::Approx(1 + 2 * x - y + 0.5 * x * y));
    CHECK_THROWS_AS(cip::interpolate_bilinear(g, b.values, 2.1, 0.0), std::out_of_range);
  }

  TEST_CASE("boundary nodes: count, order, corner ownership") {
    const auto nodes = cip::boundary_nodes(4);
    REQUIRE(nodes.size() == 12);
    int corners = 0;
    for (const auto& b : nodes) corners += b.corner;
    CHECK(corners == 4);
    CHECK(nodes[0].i == 0);
    CHECK(nodes[0].j == 0);
    CHECK(nodes[0].edge == 0);
    CHECK(nodes[3].edge == 1);
    CHECK(nodes[3].i == 3);
    CHECK(nodes[3].j == 0);
    CHECK(nodes[3].normal_x == 1);
    CHECK(nodes[11].edge == 3);
    CHECK(nodes[11].j == 1);
  }

  TEST_CASE("constant state is preserved when c = 0") {
    const SpaceGrid<double> g(3, 41);
    const auto sol = cip::solve_forward(cip::constant_field(g, 0.0), cip::constant_field(g, 1.0), TimeGrid<double>(0.3, 20));
    REQUIRE(sol.snapshots.size() == 20);
    for (const auto& s : sol.snapshots) CHECK((s.array() - 1).abs().maxCoeff() < 1e-13);
  }

  TEST_CASE("maximum principle and stability for c = 0") {
    const SpaceGrid<double> g(3, 51);
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> dist(0.5, 2);
    Field f(g);
    for (Eigen::Index i = 0; i < 51; ++i)
      for (Eigen::Index j = 0; j < 51; ++j) f(i, j) = dist(gen);
    // dt / h^2 = 37: far outside the explicit stability limit
    const auto sol = cip::solve_forward(cip::constant_field(g, 0.0), f, TimeGrid<double>(0.3, 3));
    for (const auto& s : sol.snapshots) {
      CHECK(s.allFinite());
      CHECK(s.minCoeff() >= f.values.minCoeff() - 1e-12);
      CHECK(s.maxCoeff() <= f.values.maxCoeff() + 1e-12);
    }
  }

  TEST_CASE("manufactured solution: first order in time, second order in space") {
    // time: space error negligible at 121 nodes
    const double e1 = manufactured_error(121, 11), e2 = manufactured_error(121, 21);
    CHECK(e1 / e2 == doctest::Approx(2).epsilon(0.15));
    // space: time error negligible at 3001 steps
    const double s1 = manufactured_error(16, 3001), s2 = manufactured_error(31, 3001);
    CHECK(s1 / s2 == doctest::Approx(4).epsilon(0.15));
  }

  TEST_CASE("inclusion drives growth; implicit and explicit runs agree") {
    const SpaceGrid<double> g(3, 61);
    const auto c = cip::sample_field(g, bump);
    const auto f = cip::constant_field(g, 1.0);
    const auto sol = cip::solve_forward(c, f, TimeGrid<double>(0.3, 100));
    Eigen::Index bi = 0, bj = 0;
    const double peak = sol.snapshots.back().maxCoeff(&bi, &bj);
    CHECK(peak > 1);
    CHECK(c(bi, bj) > 0);
    for (const auto& s : sol.snapshots) CHECK(s.minCoeff() >= 1 - 1e-12);
    const Eigen::MatrixXd ref = explicit_final(c, f, 0.3, 1200);
    CHECK(ref.maxCoeff() > 1);
    CHECK((sol.snapshots.back() - ref).cwiseAbs().maxCoeff() < 0.02 * (ref.maxCoeff() - 1));
  }

  TEST_CASE("cauchy data of exact fields") {
    const SpaceGrid<double> fine(3, 61), target(1, 9);
    const TimeGrid<double> time(0.3, 2);
    cip::ForwardSolution<double> linear{fine, time, {}}, constant{fine, time, {}};
    const auto x = cip::sample_field(fine, [](double x, double) { return x; });
    linear.snapshots = {x.values, x.values};
    constant.snapshots = {Eigen::MatrixXd::Ones(61, 61), Eigen::MatrixXd::Ones(61, 61)};

    const auto a = cip::extract_cauchy(linear, target);
    for (std::size_t k = 0; k < a.nodes.size(); ++k) {
      const auto& b = a.nodes[k];
      const auto row = Eigen::Index(k);
      CHECK(a.dirichlet(row, 1) == doctest::Approx(target.coordinate(b.i)));
      CHECK(a.neumann(row, 1) == doctest::Approx(double(b.normal_x)).epsilon(1e-12));
    }
    const auto c = cip::extract_cauchy(constant, target);
    CHECK((c.dirichlet.array() - 1).abs().maxCoeff() < 1e-14);
    CHECK(c.neumann.cwiseAbs().maxCoeff() < 1e-12);

    CHECK_THROWS_AS(cip::extract_cauchy(constant, SpaceGrid<double>(2.95, 9)), std::invalid_argument);
  }

  TEST_CASE("test-1 cauchy data converge under spatial refinement") {
    const TimeGrid<double> time(0.3, 100);
    const SpaceGrid<double> target(1, 80);
    const auto run = [&](Eigen::Index nodes) {
      const SpaceGrid<double> g(3, nodes);
      return cip::extract_cauchy(cip::solve_forward(cip::sample_field(g, bump), cip::constant_field(g, 1.0), time),
                                 target);
    };
    const auto coarse = run(240), fine = run(479);
    const double df = (coarse.dirichlet - fine.dirichlet).cwiseAbs().maxCoeff() / fine.dirichlet.cwiseAbs().maxCoeff();
    const double dg = (coarse.neumann - fine.neumann).cwiseAbs().maxCoeff() / fine.neumann.cwiseAbs().maxCoeff();
    CHECK(df < 0.01);
    CHECK(dg < 0.01);
  }

  TEST_CASE("mismatched grids are rejected") {
    CHECK_THROWS_AS(cip::solve_forward(cip::constant_field(SpaceGrid<double>(3, 11), 0.0),
                                       cip::constant_field(SpaceGrid<double>(3, 12), 1.0), TimeGrid<double>(0.3, 5)),
                    std::invalid_argument);
  }
}
