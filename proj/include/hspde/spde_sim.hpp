#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hspde/band_matrix.hpp"
#include "hspde/hermite.hpp"
#include "hspde/linear_solve.hpp"
#include "hspde/operators.hpp"

namespace hspde {

/// Identifies the Brownian path of one Monte-Carlo sample.
///
/// Increments are a pure function of (seed, path_index, step): the 64-bit
/// words are SplitMix64 outputs at counter 2*step + component of a stream
/// keyed by (seed, path_index), turned into a standard normal pair by
/// Box-Muller and scaled by sqrt(dt).
struct NoiseDriver {
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
  double dt = 0.0;
};

/// (dB^1, dB^2) for step `step` of the driver's path.
std::array<double, 2> gaussian_increments(const NoiseDriver& driver, std::uint64_t step);

/// Drift-implicit, noise-explicit Euler-Maruyama step on the Galerkin space:
///   x -> (I - dt L_N)^{-1} (x + A1 x dB^1 + A2 x dB^2).
class SpdeStepper {
 public:
  SpdeStepper(const OperatorParams& params, std::size_t N, double dt);

  std::size_t size() const noexcept { return n_; }
  double dt() const noexcept { return dt_; }
  const BandedSolver& drift_solver() const noexcept { return drift_; }

  CoeffVec step(const CoeffVec& x, const std::array<double, 2>& increments) const;

 private:
  std::size_t n_;
  double dt_;
  BandMatrix a1_;
  BandMatrix a2_;
  BandedSolver drift_;
};

inline CoeffVec spde_step(const CoeffVec& x, const SpdeStepper& stepper, const std::array<double, 2>& increments) {
  return stepper.step(x, increments);
}

/// Per-path initial condition for random Psi: (seed, path_index) -> Psi.
using InitialSampler = std::function<CoeffVec(std::uint64_t seed, std::uint64_t path_index)>;

struct PathFailure {
  std::size_t path_index = 0;
  std::size_t step = 0;
  std::string message;
};

struct PathEnsemble {
  OperatorParams params;
  double p = 0.0;
  std::size_t N = 0;
  double dt = 0.0;
  double T = 0.0;
  std::size_t M = 0;
  std::uint64_t seed = 0;
  /// Save times; always starts at 0.
  std::vector<double> t_grid;
  /// paths[m][k] = X_{t_k} for path m. Failed paths keep only the states
  /// saved before the failure.
  std::vector<std::vector<CoeffVec>> paths;
  std::vector<PathFailure> failures;

  bool path_ok(std::size_t m) const { return paths[m].size() == t_grid.size(); }
  std::size_t successful_paths() const;
};

struct SimulationOptions {
  /// Worker threads; results do not depend on this.
  unsigned threads = 1;
  std::optional<InitialSampler> initial_sampler;
};

/// M independent paths of the drift-implicit Euler-Maruyama scheme, saved
/// at save_times (each a multiple of dt within 1e-12; 0 is always saved).
PathEnsemble simulate(const CoeffVec& psi, const OperatorParams& params, double p, std::size_t N, double dt, double T,
                      std::size_t M, std::uint64_t seed, std::span<const double> save_times,
                      const SimulationOptions& options = {});

struct McMean {
  CoeffVec mean;
  /// Coefficientwise standard error of the mean.
  CoeffVec se;
  std::size_t paths = 0;
};

/// Requires at least two successful paths.
McMean mc_mean(const PathEnsemble& ens, std::size_t time_index);

struct McGap {
  double gap = 0.0;           // |mean - target|_q
  double aggregate_se = 0.0;  // |se|_q
  double gap_over_se = 0.0;
};

McGap mc_gap(const McMean& estimate, const CoeffVec& target, double q);

struct EnergyReport {
  double C = 0.0;
  double p_check = 0.0;
  std::vector<double> mean_energy;  // sample mean of |X_t|^2_{p_check}
  std::vector<double> se_energy;
  std::vector<double> envelope;  // e^{C t} E|Psi|^2_{p_check}
  /// mean / (envelope (1 + 4 SE_rel)) per save time.
  std::vector<double> ratios;
  double worst_ratio = 0.0;
  bool passed = false;
};

/// Checks E|X_t|^2_{p_check} <= e^{C t} E|Psi|^2_{p_check} at 4-SE confidence.
EnergyReport energy_report(const PathEnsemble& ens, double C, double p_check);

}  // namespace hspde
