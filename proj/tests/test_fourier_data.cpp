#include "cip/forward_sim.hpp"
#include "cip/fourier_data.hpp"

#include <doctest.h>

#include <cmath>

using cip::SpaceGrid;
using cip::TimeBasis;
using cip::TimeGrid;

namespace {

// A one-node series container with the given Dirichlet rows.
cip::BoundaryTimeSeries<double> series_of(const Eigen::MatrixXd& rows, const TimeGrid<double>& time) {
  const SpaceGrid<double> grid(1, 3);
  auto nodes = cip::boundary_nodes(3);
  nodes.resize(std::size_t(rows.rows()));
  return {grid, nodes, time, rows, Eigen::MatrixXd::Zero(rows.rows(), rows.cols())};
}

double bump(double x, double y) {
  const double r2 = x * x + (y + 0.3) * (y + 0.3);
  return r2 < 0.0529 ? 20 * std::exp(r2 / (r2 - 0.0529)) : 0;
}

}  // namespace

TEST_SUITE("fourier_data") {
  TEST_CASE("time-constant data have no coefficients") {
    const TimeBasis<double> basis(0.3, 25);
    const TimeGrid<double> time(0.3, 100);
    const Eigen::MatrixXd rows = Eigen::MatrixXd::Constant(2, 100, 3.5);
    const auto data = cip::project(series_of(rows, time), basis);
    CHECK(data.dirichlet.cwiseAbs().maxCoeff() < 1e-11);
  }

  TEST_CASE("antiderivative of a basis function projects to a unit vector") {
    const int order = 25;
    const TimeBasis<double> basis(0.3, order);
    const double g = -2.5;
    const auto deviation = [&](Eigen::Index nodes) -> Eigen::MatrixXd {
      const TimeGrid<double> time(0.3, nodes);
      const auto rule = cip::gauss_legendre<double>(16);
      // Row k-1: int_0^t psi_k(s) ds at every node, by Gauss-Legendre per step.
      Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(order, time.size());
      for (Eigen::Index l = 1; l < time.size(); ++l) {
        const double a = time.node(l - 1), b = time.node(l);
        Eigen::VectorXd step = Eigen::VectorXd::Zero(order);
        for (Eigen::Index q = 0; q < rule.size(); ++q)
          step += rule.weights(q) * (b - a) / 2 * basis.evaluate(a + (b - a) * (rule.nodes(q) + 1) / 2);
        rows.col(l) = rows.col(l - 1) + step;
      }
      const auto data = cip::project(series_of(g * rows, time), basis);
      return (data.dirichlet - g * Eigen::MatrixXd::Identity(order, order)).cwiseAbs();
    };
    // 100 samples cannot resolve the antiderivative of psi_25; the oracle
    // holds there for the first modes only and is asserted on a fine grid.
    const Eigen::MatrixXd coarse = deviation(100), mid = deviation(400), fine = deviation(4000);
    MESSAGE("Kronecker oracle at 100 nodes: k=1 " << coarse.row(0).maxCoeff() << ", k=25 " << coarse.row(24).maxCoeff());
    MESSAGE("Kronecker oracle at 4000 nodes: " << fine.maxCoeff());
    CHECK(coarse.topRows(3).maxCoeff() <= 1e-6 * std::abs(g));
    CHECK(fine.maxCoeff() <= 1e-6 * std::abs(g));
    // fourth order in the step
    CHECK(coarse.maxCoeff() / mid.maxCoeff() >= 50);
  }

  TEST_CASE("projection is linear") {
    const TimeBasis<double> basis(0.3, 10);
    const TimeGrid<double> time(0.3, 50);
    Eigen::MatrixXd f1(1, 50), f2(1, 50);
    for (Eigen::Index l = 0; l < 50; ++l) {
      f1(0, l) = std::sin(7 * time.node(l));
      f2(0, l) = std::exp(-3 * time.node(l)) + time.node(l);
    }
    const auto p1 = cip::project(series_of(f1, time), basis);
    const auto p2 = cip::project(series_of(f2, time), basis);
    const auto p = cip::project(series_of(2.5 * f1 - 0.75 * f2, time), basis);
    CHECK((p.dirichlet - (2.5 * p1.dirichlet - 0.75 * p2.dirichlet)).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("integration by parts agrees with differencing the series first") {
    const int order = 25;
    const TimeBasis<double> basis(0.3, order);
    const TimeGrid<double> time(0.3, 100);
    const auto F = [](double t) { return std::sin(5 * t) + t * t + std::exp(-2 * t); };
    Eigen::MatrixXd rows(1, time.size());
    for (Eigen::Index l = 0; l < time.size(); ++l) rows(0, l) = F(time.node(l));
    const auto by_parts = cip::project(series_of(rows, time), basis);

    // Direct: second-order differences of the samples, then the same
    // piecewise-cubic product rule applied to the differenced series.
    const double dt = time.step();
    const Eigen::Index n = time.size();
    Eigen::VectorXd ft(n);
    ft(0) = (-3 * rows(0, 0) + 4 * rows(0, 1) - rows(0, 2)) / (2 * dt);
    ft(n - 1) = (3 * rows(0, n - 1) - 4 * rows(0, n - 2) + rows(0, n - 3)) / (2 * dt);
    for (Eigen::Index l = 1; l + 1 < n; ++l) ft(l) = (rows(0, l + 1) - rows(0, l - 1)) / (2 * dt);
    const auto rule = cip::gauss_legendre<double>(8);
    Eigen::VectorXd direct = Eigen::VectorXd::Zero(order);
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
      const Eigen::Index start = std::clamp<Eigen::Index>(k - 1, 0, n - 4);
      for (Eigen::Index q = 0; q < rule.size(); ++q) {
        const double t = time.node(k) + dt * (rule.nodes(q) + 1) / 2;
        double value = 0;
        for (int a = 0; a < 4; ++a) {
          double w = 1;
          for (int b = 0; b < 4; ++b)
            if (b != a) w *= (t - time.node(start + b)) / (time.node(start + a) - time.node(start + b));
          value += w * ft(start + a);
        }
        direct += rule.weights(q) * dt / 2 * value * basis.evaluate(t);
      }
    }
    const double err = (by_parts.dirichlet.row(0).transpose() - direct).cwiseAbs().maxCoeff();
    MESSAGE("by parts vs differenced: " << err);
    CHECK(err <= 1e-4);
  }

  TEST_CASE("interpolant derivative weights are exact for cubics") {
    const TimeGrid<double> time(0.3, 100);
    Eigen::VectorXd samples(100);
    for (Eigen::Index l = 0; l < 100; ++l) {
      const double t = time.node(l);
      samples(l) = 1 - 2 * t + 5 * t * t - 7 * t * t * t;
    }
    for (double t : {0.0, 0.1234, 0.3}) {
      const double exact = -2 + 10 * t - 21 * t * t;
      CHECK(cip::interpolant_derivative_weights(time, t).dot(samples) == doctest::Approx(exact).epsilon(1e-9));
    }
  }

  TEST_CASE("test-1 data: truncated expansion reproduces the time derivative on the boundary") {
    const TimeGrid<double> time(0.3, 100);
    const SpaceGrid<double> sim(3, 240);
    const auto series = cip::extract_cauchy(
        cip::solve_forward(cip::sample_field(sim, bump), cip::constant_field(sim, 1.0), time), SpaceGrid<double>(1, 80));
    const TimeBasis<double> basis(0.3, 25);
    const auto data = cip::project(series, basis);
    double err = 0, scale = 0;
    for (Eigen::Index l = 1; l + 1 < time.size(); ++l) {
      const Eigen::VectorXd ft = (series.dirichlet.col(l + 1) - series.dirichlet.col(l - 1)) / (2 * time.step());
      const Eigen::VectorXd v = data.dirichlet * basis.evaluate(time.node(l));
      err = std::max(err, (v - ft).cwiseAbs().maxCoeff());
      scale = std::max(scale, ft.cwiseAbs().maxCoeff());
    }
    MESSAGE("boundary sup error " << err << ", sup |F_t| " << scale);
    CHECK(err <= 1e-2);
  }

  TEST_CASE("mismatched final times are rejected") {
    const TimeBasis<double> basis(0.3, 3);
    CHECK_THROWS_AS(cip::project(series_of(Eigen::MatrixXd::Ones(1, 10), TimeGrid<double>(0.4, 10)), basis),
                    std::invalid_argument);
  }

  TEST_CASE("noise") {
    const TimeBasis<double> basis(0.3, 25);
    cip::FourierBoundaryData<double> data{SpaceGrid<double>(1, 80), cip::boundary_nodes(80), 0.3,
                                          Eigen::MatrixXd::Ones(316, 25), Eigen::MatrixXd::Constant(316, 25, -2.0)};

    SUBCASE("zero level returns the input bit for bit") {
      const auto out = cip::add_noise(data, 0.0, 42);
      CHECK(out.dirichlet == data.dirichlet);
      CHECK(out.neumann == data.neumann);
    }
    SUBCASE("bounded relative perturbation with centered draws") {
      const auto out = cip::add_noise(data, 0.1, 42);
      const Eigen::ArrayXXd rf = (out.dirichlet.array() / data.dirichlet.array() - 1) / 0.1;
      const Eigen::ArrayXXd rg = (out.neumann.array() / data.neumann.array() - 1) / 0.1;
      CHECK(rf.abs().maxCoeff() <= 1 + 1e-12);
      CHECK(rg.abs().maxCoeff() <= 1 + 1e-12);
      const double mean = (rf.sum() + rg.sum()) / double(rf.size() + rg.size());
      CHECK(rf.size() + rg.size() >= 10000);
      CHECK(std::abs(mean) < 0.02);
      CHECK(out.noise_level == 0.1);
      CHECK(out.seed == 42);
    }
    SUBCASE("seeded determinism and seed independence") {
      const auto a = cip::add_noise(data, 0.1, 7), b = cip::add_noise(data, 0.1, 7), c = cip::add_noise(data, 0.1, 8);
      CHECK(a.dirichlet == b.dirichlet);
      CHECK(a.neumann == b.neumann);
      CHECK(a.dirichlet != c.dirichlet);
      CHECK(a.neumann != c.neumann);
    }
    CHECK_THROWS_AS(cip::add_noise(data, -0.1, 1), std::invalid_argument);
  }
}
