#include "hspde/spde_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "hspde/errors.hpp"

namespace hspde {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t path_key(std::uint64_t seed, std::uint64_t path_index) {
  return mix64(mix64(seed + kGolden) ^ (path_index * 0xD1B54A32D192ED03ULL + kGolden));
}

// Uniform in (0, 1]: never 0, so log() below stays finite.
double to_unit_interval(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53; }

bool on_step_grid(double t, double dt, std::size_t& index) {
  const double k = std::round(t / dt);
  index = static_cast<std::size_t>(k);
  return std::abs(t - k * dt) <= 1e-12 * std::max(1.0, std::abs(t));
}

}  // namespace

std::array<double, 2> gaussian_increments(const NoiseDriver& driver, std::uint64_t step) {
  if (!(driver.dt > 0.0)) throw std::invalid_argument("gaussian_increments: dt must be positive");
  const std::uint64_t key = path_key(driver.seed, driver.path_index);
  const double u1 = to_unit_interval(mix64(key + (2 * step + 1) * kGolden));
  const double u2 = to_unit_interval(mix64(key + (2 * step + 2) * kGolden));
  const double radius = std::sqrt(-2.0 * std::log(u1)) * std::sqrt(driver.dt);
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

SpdeStepper::SpdeStepper(const OperatorParams& params, std::size_t N, double dt)
    : n_(N),
      dt_(dt),
      a1_(A_matrices(params, N, MatrixForm::galerkin).first),
      a2_(A_matrices(params, N, MatrixForm::galerkin).second),
      drift_(identity_minus(L_matrix(params, N, MatrixForm::galerkin), dt)) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("SpdeStepper: dt must be positive");
}

CoeffVec SpdeStepper::step(const CoeffVec& x, const std::array<double, 2>& increments) const {
  if (x.size() != n_) throw std::invalid_argument("SpdeStepper::step: state length differs from N");
  const std::vector<double> a1x = a1_.apply(x.values());
  const std::vector<double> a2x = a2_.apply(x.values());
  std::vector<double> rhs(n_);
  for (std::size_t i = 0; i < n_; ++i) rhs[i] = x[i] + a1x[i] * increments[0] + a2x[i] * increments[1];
  std::vector<double> next = drift_.solve(rhs);
  for (std::size_t i = 0; i < n_; ++i) {
    if (!std::isfinite(next[i])) throw NumericalError("spde_step: non-finite state");
  }
  return CoeffVec(std::move(next));
}

std::size_t PathEnsemble::successful_paths() const {
  std::size_t count = 0;
  for (std::size_t m = 0; m < paths.size(); ++m) count += path_ok(m) ? 1 : 0;
  return count;
}

PathEnsemble simulate(const CoeffVec& psi, const OperatorParams& params, double p, std::size_t N, double dt, double T,
                      std::size_t M, std::uint64_t seed, std::span<const double> save_times,
                      const SimulationOptions& options) {
  params.validate();
  if (N == 0) throw std::invalid_argument("simulate: N must be positive");
  if (M == 0) throw std::invalid_argument("simulate: M must be at least 1");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("simulate: dt must be positive");
  if (!(T >= 0.0) || !std::isfinite(T)) throw std::invalid_argument("simulate: T must be nonnegative");
  if (psi.size() > N) throw std::invalid_argument("simulate: initial condition longer than N");

  std::size_t total_steps = 0;
  if (!on_step_grid(T, dt, total_steps)) throw std::invalid_argument("simulate: T is not a multiple of dt");

  // save_steps[k] = step index of the k-th save time.
  std::vector<double> times{0.0};
  std::vector<std::size_t> save_steps{0};
  for (double t : save_times) {
    if (t == 0.0) continue;
    std::size_t idx = 0;
    if (!(t > times.back()) || t > T * (1.0 + 1e-12) || !on_step_grid(t, dt, idx)) {
      std::ostringstream os;
      os << "simulate: save time " << t << " must be increasing, within [0, T] and a multiple of dt";
      throw std::invalid_argument(os.str());
    }
    times.push_back(t);
    save_steps.push_back(idx);
  }

  PathEnsemble ens;
  ens.params = params;
  ens.p = p;
  ens.N = N;
  ens.dt = dt;
  ens.T = T;
  ens.M = M;
  ens.seed = seed;
  ens.t_grid = times;
  ens.paths.resize(M);
  std::vector<std::optional<PathFailure>> failures(M);

  const SpdeStepper stepper(params, N, dt);
  const CoeffVec start = psi.resized(N);

  auto run_path = [&](std::size_t m) {
    NoiseDriver driver{seed, m, dt};
    CoeffVec x = options.initial_sampler ? (*options.initial_sampler)(seed, m).resized(N) : start;
    auto& out = ens.paths[m];
    out.reserve(times.size());
    out.push_back(x);
    std::size_t next_save = 1;
    for (std::size_t n = 1; n <= save_steps.back(); ++n) {
      try {
        x = stepper.step(x, gaussian_increments(driver, n - 1));
      } catch (const NumericalError& e) {
        failures[m] = PathFailure{m, n, e.what()};
        return;
      }
      while (next_save < save_steps.size() && save_steps[next_save] == n) {
        out.push_back(x);
        ++next_save;
      }
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(M)));
  if (threads == 1) {
    for (std::size_t m = 0; m < M; ++m) run_path(m);
  } else {
    std::vector<std::jthread> workers;
    for (unsigned t = 0; t < threads; ++t) {
      workers.emplace_back([&, t] {
        for (std::size_t m = t; m < M; m += threads) run_path(m);
      });
    }
  }

  for (auto& f : failures) {
    if (f) ens.failures.push_back(std::move(*f));
  }
  return ens;
}

McMean mc_mean(const PathEnsemble& ens, std::size_t time_index) {
  if (time_index >= ens.t_grid.size()) throw std::out_of_range("mc_mean: time index beyond save grid");
  const std::size_t n = ens.N;
  std::vector<double> sum(n, 0.0);
  std::size_t count = 0;
  for (std::size_t m = 0; m < ens.paths.size(); ++m) {
    if (!ens.path_ok(m)) continue;
    const CoeffVec& x = ens.paths[m][time_index];
    for (std::size_t i = 0; i < n; ++i) sum[i] += x[i];
    ++count;
  }
  if (count == 0) throw NumericalError("mc_mean: all paths failed");
  if (count < 2) throw std::invalid_argument("mc_mean: need at least two successful paths");
  std::vector<double> mean(n);
  for (std::size_t i = 0; i < n; ++i) mean[i] = sum[i] / static_cast<double>(count);
  // Second pass for the variance.
  std::vector<double> ss(n, 0.0);
  for (std::size_t m = 0; m < ens.paths.size(); ++m) {
    if (!ens.path_ok(m)) continue;
    const CoeffVec& x = ens.paths[m][time_index];
    for (std::size_t i = 0; i < n; ++i) {
      const double d = x[i] - mean[i];
      ss[i] += d * d;
    }
  }
  std::vector<double> se(n);
  const double c = static_cast<double>(count);
  for (std::size_t i = 0; i < n; ++i) se[i] = std::sqrt(ss[i] / (c - 1.0) / c);
  return McMean{CoeffVec(std::move(mean)), CoeffVec(std::move(se)), count};
}

McGap mc_gap(const McMean& estimate, const CoeffVec& target, double q) {
  const std::size_t n = std::max(estimate.mean.size(), target.size());
  const SobolevWeights w(q, n);
  const CoeffVec mean = estimate.mean.resized(n);
  const CoeffVec tgt = target.resized(n);
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = mean[i] - tgt[i];
  McGap g;
  g.gap = norm_p(CoeffVec(std::move(diff)), w);
  g.aggregate_se = norm_p(estimate.se.resized(n), w);
  g.gap_over_se = g.aggregate_se > 0.0 ? g.gap / g.aggregate_se : (g.gap == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  return g;
}

EnergyReport energy_report(const PathEnsemble& ens, double C, double p_check) {
  EnergyReport r;
  r.C = C;
  r.p_check = p_check;
  const SobolevWeights w(p_check, ens.N);
  const std::size_t times = ens.t_grid.size();
  double initial = 0.0;
  for (std::size_t k = 0; k < times; ++k) {
    double sum = 0.0;
    std::size_t count = 0;
    std::vector<double> values;
    for (std::size_t m = 0; m < ens.paths.size(); ++m) {
      if (!ens.path_ok(m)) continue;
      values.push_back(inner_p(ens.paths[m][k], ens.paths[m][k], w));
      sum += values.back();
      ++count;
    }
    if (count < 2) throw std::invalid_argument("energy_report: need at least two successful paths");
    const double mean = sum / static_cast<double>(count);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double se = std::sqrt(ss / static_cast<double>(count - 1) / static_cast<double>(count));
    if (k == 0) initial = mean;
    const double envelope = std::exp(C * ens.t_grid[k]) * initial;
    const double se_rel = mean > 0.0 ? se / mean : 0.0;
    const double allowed = envelope * (1.0 + 4.0 * se_rel);
    const double ratio = allowed > 0.0 ? mean / allowed : (mean == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
    r.mean_energy.push_back(mean);
    r.se_energy.push_back(se);
    r.envelope.push_back(envelope);
    r.ratios.push_back(ratio);
    r.worst_ratio = std::max(r.worst_ratio, ratio);
  }
  r.passed = r.worst_ratio <= 1.0;
  return r;
}

}  // namespace hspde
