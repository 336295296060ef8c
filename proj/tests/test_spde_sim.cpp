#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <stdexcept>

#include "hspde/errors.hpp"
#include "hspde/monotonicity.hpp"
#include "hspde/pde_solver.hpp"
#include "hspde/serialize.hpp"
#include "hspde/spde_sim.hpp"
#include "test_support.hpp"

using namespace hspde;
using testing_support::difference;

namespace {

bool ensembles_equal(const PathEnsemble& a, const PathEnsemble& b) {
  if (a.paths.size() != b.paths.size() || a.t_grid != b.t_grid) return false;
  for (std::size_t m = 0; m < a.paths.size(); ++m) {
    if (a.paths[m] != b.paths[m]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("gaussian_increments determinism and statistics") {
  const NoiseDriver d{42, 3, 1e-3};
  CHECK(gaussian_increments(d, 17) == gaussian_increments(d, 17));
  CHECK(gaussian_increments(d, 17) != gaussian_increments(d, 18));
  CHECK(gaussian_increments(d, 17) != gaussian_increments(NoiseDriver{42, 4, 1e-3}, 17));
  CHECK(gaussian_increments(d, 17) != gaussian_increments(NoiseDriver{43, 3, 1e-3}, 17));

  const double dt = 1e-2;
  const std::size_t draws = 1'000'000;
  for (int component = 0; component < 2; ++component) {
    double sum = 0.0;
    double sq = 0.0;
    for (std::size_t s = 0; s < draws / 1000; ++s) {
      for (std::uint64_t step = 0; step < 1000; ++step) {
        const double x = gaussian_increments(NoiseDriver{7, s, dt}, step)[component];
        sum += x;
        sq += x * x;
      }
    }
    const double mean = sum / draws;
    const double var = sq / draws - mean * mean;
    CHECK(std::abs(mean) <= 4.0 * std::sqrt(dt / draws));
    CHECK(std::abs(var - dt) <= 0.01 * dt);
  }
  // The two components are uncorrelated.
  double cross = 0.0;
  for (std::uint64_t step = 0; step < 200'000; ++step) {
    const auto inc = gaussian_increments(NoiseDriver{9, 0, 1.0}, step);
    cross += inc[0] * inc[1];
  }
  CHECK(std::abs(cross / 200'000.0) <= 4.0 / std::sqrt(200'000.0));

  CHECK_THROWS_AS(gaussian_increments(NoiseDriver{1, 0, 0.0}, 0), std::invalid_argument);
}

TEST_CASE("spde_step examples") {
  std::mt19937_64 gen(18);
  const CoeffVec x = testing_support::random_coeffs(20, gen);
  const SpdeStepper zero({0.0, 0.0, 0.0}, 20, 1e-2);
  CHECK(spde_step(x, zero, {0.3, -0.7}) == x);

  // Pure transport with zero increments is one implicit-Euler PDE step, bit for bit.
  const OperatorParams transport{0.0, 0.0, 1.5};
  const SpdeStepper stepper(transport, 20, 1e-2);
  const PdeRun pde = solve_pde(x, transport, 1.0, 20, std::vector<double>{0.0, 1e-2}, TimeMethod::implicit_euler);
  CHECK(spde_step(x, stepper, {0.0, 0.0}) == pde.states.back());
  CHECK(implicit_euler_step(stepper.drift_solver(), x) == pde.states.back());

  CHECK_THROWS_AS(spde_step(CoeffVec(5), stepper, {0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("one step against the hand-unrolled formula") {
  const std::size_t n = 16;
  const double dt = 1e-2;
  const OperatorParams params{0.0, 1.0, 0.0};
  const std::vector<double> save{dt};
  const PathEnsemble ens = simulate(CoeffVec::unit(n, 0), params, 1.0, n, dt, dt, 1, 5, save);
  const auto inc = gaussian_increments(NoiseDriver{5, 0, dt}, 0);

  const BandMatrix d1 = d1_matrix(n, MatrixForm::galerkin);
  const std::vector<double> d1e0 = d1.apply(CoeffVec::unit(n, 0).values());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(0) = 1.0;
  for (std::size_t i = 0; i < n; ++i) rhs(static_cast<long>(i)) -= params.sigma * inc[0] * d1e0[i];
  const Eigen::MatrixXd a = identity_minus(L_matrix(params, n, MatrixForm::galerkin), dt).to_dense();
  const Eigen::VectorXd expected = a.partialPivLu().solve(rhs);
  REQUIRE(ens.paths[0].size() == 2);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(ens.paths[0][1][i] == doctest::Approx(expected(static_cast<long>(i))).epsilon(1e-13));
  }
}

TEST_CASE("mean of one step is the implicit-Euler step") {
  const std::size_t n = 12;
  const double dt = 1e-2;
  const OperatorParams params{1.0, 1.0, 0.5};
  const SpdeStepper stepper(params, n, dt);
  const CoeffVec x = CoeffVec{1.0, 0.3, -0.2, 0.1}.resized(n);
  const std::size_t draws = 100'000;
  std::vector<double> sum(n, 0.0), sq(n, 0.0);
  for (std::size_t m = 0; m < draws; ++m) {
    const CoeffVec y = spde_step(x, stepper, gaussian_increments(NoiseDriver{77, m, dt}, 0));
    for (std::size_t i = 0; i < n; ++i) {
      sum[i] += y[i];
      sq[i] += y[i] * y[i];
    }
  }
  const CoeffVec target = implicit_euler_step(stepper.drift_solver(), x);
  for (std::size_t i = 0; i < n; ++i) {
    const double mean = sum[i] / draws;
    const double se = std::sqrt(std::max(0.0, sq[i] / draws - mean * mean) / draws);
    CHECK(std::abs(mean - target[i]) <= 4.0 * se + 1e-15);
  }
}

TEST_CASE("simulate basic contracts") {
  const std::size_t n = 16;
  const CoeffVec psi = CoeffVec{0.5, 0.0, 0.25}.resized(n);
  const std::vector<double> save{0.05, 0.1};

  const PathEnsemble still = simulate(psi, {0.0, 0.0, 0.0}, 1.0, n, 1e-2, 0.1, 1, 0, save);
  REQUIRE(still.paths.size() == 1);
  for (const auto& s : still.paths[0]) CHECK(s == psi);
  CHECK(still.t_grid == std::vector<double>{0.0, 0.05, 0.1});

  const OperatorParams params{1.0, 1.0, 0.0};
  const PathEnsemble a = simulate(psi, params, 1.0, n, 1e-2, 0.1, 20, 3, save);
  const PathEnsemble b = simulate(psi, params, 1.0, n, 1e-2, 0.1, 20, 3, save);
  CHECK(ensembles_equal(a, b));
  for (const auto& path : a.paths) {
    CHECK(path.front() == psi);
    for (const auto& s : path) CHECK(s.all_finite());
  }
  CHECK(a.successful_paths() == 20);

  SimulationOptions threaded;
  threaded.threads = 5;
  CHECK(ensembles_equal(a, simulate(psi, params, 1.0, n, 1e-2, 0.1, 20, 3, save, threaded)));

  CHECK_THROWS_AS(simulate(psi, params, 1.0, n, 1e-2, 0.1, 0, 3, save), std::invalid_argument);
  CHECK_THROWS_AS(simulate(psi, params, 1.0, n, 1e-2, 0.1, 2, 3, std::vector<double>{0.055}),
                  std::invalid_argument);
  CHECK_THROWS_AS(simulate(psi, params, 1.0, n, 1e-2, 0.1, 2, 3, std::vector<double>{0.2}), std::invalid_argument);
  CHECK_THROWS_AS(simulate(psi, params, 1.0, n, 1e-2, 0.105, 2, 3, save), std::invalid_argument);
}

TEST_CASE("linearity in the initial condition") {
  const std::size_t n = 24;
  const OperatorParams params{1.0, 1.0, 1.0};
  std::mt19937_64 gen(19);
  const CoeffVec psi = testing_support::random_coeffs(n, gen);
  const double alpha = -2.75;
  const std::vector<double> save{0.1, 0.2};
  const PathEnsemble a = simulate(psi, params, 1.0, n, 1e-2, 0.2, 8, 4, save);
  const PathEnsemble b = simulate(testing_support::scaled(psi, alpha), params, 1.0, n, 1e-2, 0.2, 8, 4, save);
  for (std::size_t m = 0; m < 8; ++m) {
    for (std::size_t k = 0; k < a.t_grid.size(); ++k) {
      const CoeffVec expected = testing_support::scaled(a.paths[m][k], alpha);
      CHECK(norm_p(difference(b.paths[m][k], expected), 0.0) <= 1e-12 * norm_p(expected, 0.0));
    }
  }
}

TEST_CASE("random initial condition sampler") {
  SimulationOptions options;
  options.initial_sampler = [](std::uint64_t seed, std::uint64_t path) {
    return CoeffVec{static_cast<double>(seed), static_cast<double>(path)};
  };
  const PathEnsemble ens = simulate(CoeffVec{}, {0.0, 0.0, 0.0}, 0.0, 4, 0.1, 0.1, 3, 9, {}, options);
  for (std::size_t m = 0; m < 3; ++m) CHECK(ens.paths[m][0] == CoeffVec({9.0, static_cast<double>(m), 0.0, 0.0}));
}

TEST_CASE("mc_mean") {
  const CoeffVec psi = CoeffVec{1.0, -1.0}.resized(6);
  const PathEnsemble still = simulate(psi, {0.0, 0.0, 0.0}, 1.0, 6, 0.1, 0.2, 5, 1, std::vector<double>{0.2});
  const McMean mm = mc_mean(still, 1);
  CHECK(mm.mean == psi);
  CHECK(mm.se == CoeffVec(6));
  CHECK(mm.paths == 5);
  CHECK_THROWS_AS(mc_mean(still, 2), std::out_of_range);

  const PathEnsemble single = simulate(psi, {0.0, 0.0, 0.0}, 1.0, 6, 0.1, 0.2, 1, 1, std::vector<double>{0.2});
  CHECK_THROWS_AS(mc_mean(single, 0), std::invalid_argument);
}

TEST_CASE("standard error shrinks like one over root M") {
  const std::size_t n = 16;
  const OperatorParams params{1.0, 1.0, 0.0};
  const std::vector<double> save{0.1};
  const McMean small = mc_mean(simulate(CoeffVec::unit(n, 0), params, 1.0, n, 1e-2, 0.1, 2000, 21, save), 1);
  const McMean large = mc_mean(simulate(CoeffVec::unit(n, 0), params, 1.0, n, 1e-2, 0.1, 4000, 22, save), 1);
  const double ratio = norm_p(small.se, -1.0) / norm_p(large.se, -1.0);
  CHECK(ratio == doctest::Approx(std::sqrt(2.0)).epsilon(0.2));
}

TEST_CASE("mean consistency with the implicit-Euler iterate") {
  const std::size_t n = 16;
  const double dt = 2e-3;
  const double T = 0.2;
  const OperatorParams params{1.0, 1.0, 0.5};
  const CoeffVec psi = CoeffVec{1.0, 0.5, -0.5}.resized(n);
  const std::vector<double> save{0.05, 0.1, 0.2};
  const PathEnsemble ens = simulate(psi, params, 1.0, n, dt, T, 4000, 31, save);
  const PdeRun ref = solve_pde(psi, params, 1.0, n, uniform_grid(T, dt), TimeMethod::implicit_euler);
  for (std::size_t k = 1; k < ens.t_grid.size(); ++k) {
    const auto step = static_cast<std::size_t>(std::llround(ens.t_grid[k] / dt));
    const McMean mm = mc_mean(ens, k);
    const McGap gap = mc_gap(mm, ref.states[step], -1.0);
    CHECK(gap.gap_over_se <= 4.0);
  }
}

TEST_CASE("stability smoke property at fixed seeds") {
  const std::size_t n = 128;
  const PathEnsemble ens =
      simulate(CoeffVec::unit(n, 0), {2.0, 2.0, -2.0}, 1.0, n, 1e-2, 1.0, 4, 2024, std::vector<double>{0.5, 1.0});
  CHECK(ens.failures.empty());
  for (const auto& path : ens.paths) {
    for (const auto& s : path) CHECK(s.all_finite());
  }
}

TEST_CASE("mc_gap") {
  McMean est{CoeffVec{1.0, 2.0}, CoeffVec{0.5, 0.0}, 10};
  const McGap g = mc_gap(est, CoeffVec{1.0, 1.0}, 0.0);
  CHECK(g.gap == doctest::Approx(1.0));
  CHECK(g.aggregate_se == doctest::Approx(0.5));
  CHECK(g.gap_over_se == doctest::Approx(2.0));
  const McGap exact = mc_gap(McMean{CoeffVec{1.0}, CoeffVec{0.0}, 2}, CoeffVec{1.0}, 0.0);
  CHECK(exact.gap_over_se == 0.0);
}

TEST_CASE("energy_report") {
  const std::size_t n = 16;
  const PathEnsemble still =
      simulate(CoeffVec::unit(n, 1), {0.0, 0.0, 0.0}, 1.0, n, 0.1, 0.5, 4, 1, std::vector<double>{0.2, 0.5});
  const EnergyReport flat = energy_report(still, 0.0, -1.0);
  CHECK(flat.passed);
  for (double r : flat.ratios) CHECK(r == doctest::Approx(1.0).epsilon(1e-15));

  const OperatorParams params{1.0, 1.0, 2.0};
  const double p = 1.0;
  const double c = estimate_constant(p - 2.0, params, 32, 1e-3).C_estimate;
  const PathEnsemble ens = simulate(CoeffVec::unit(32, 0), params, p, 32, 1e-2, 0.5, 2000, 41,
                                    std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5});
  const EnergyReport report = energy_report(ens, c, p - 2.0);
  CHECK(report.passed);
  CHECK(report.worst_ratio <= 1.0);
  const json j = to_json(report);
  CHECK(j.at("times").size() == 6);
  CHECK_NOTHROW(assert_all_finite(j));
}

TEST_CASE("ensemble summary and path CSV") {
  const PathEnsemble ens =
      simulate(CoeffVec{1.0}, {1.0, 1.0, 0.0}, 1.0, 3, 0.1, 0.2, 3, 2, std::vector<double>{0.1, 0.2});
  const json s = ensemble_summary(ens);
  CHECK(s.at("successful_paths") == 3);
  CHECK(s.at("times").size() == 3);
  CHECK(s.at("times")[0].at("mean") == json::array({1.0, 0.0, 0.0}));
  CHECK(s.at("failed_paths").empty());
  const std::string csv = path_csv(ens, 1);
  CHECK(csv.rfind("t,c0,c1,c2\n0,1,0,0\n", 0) == 0);
}
