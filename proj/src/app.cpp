#include "hspde/app.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <limits>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hspde/errors.hpp"
#include "hspde/monotonicity.hpp"
#include "hspde/pde_solver.hpp"
#include "hspde/serialize.hpp"
#include "hspde/spde_sim.hpp"

namespace hspde {

namespace {

/// Results plus the CSV files (name, contents) a command produces.
struct Artifacts {
  json results = json::object();
  std::vector<std::pair<std::string, std::string>> csv;
};

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Entries uniform in [-1, 1) from a fixed 64-bit Mersenne Twister stream.
std::vector<CoeffVec> random_vectors(std::size_t count, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<CoeffVec> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    std::vector<double> v(n);
    for (auto& x : v) x = static_cast<double>(gen() >> 11) * 0x1.0p-52 - 1.0;
    out.emplace_back(std::move(v));
  }
  return out;
}

std::size_t sweep_size(std::size_t N) { return std::max<std::size_t>(16, N); }

json g_values(double p) {
  json g = json::array();
  for (int j = 1; j <= 4; ++j) g.push_back(g_at_zero(j, p));
  return g;
}

Artifacts verify_monotonicity(const RunConfig& cfg, std::ostream& log) {
  Artifacts a;
  const auto samples = random_vectors(cfg.samples, cfg.N, cfg.seed);

  log << "[verify-monotonicity] identity check on " << samples.size() << " vectors, N=" << cfg.N << "\n";
  double identity_max = 0.0;
  for (const auto& u : samples) identity_max = std::max(identity_max, identity_gap(u, cfg.p));

  log << "[verify-monotonicity] p = 0 degeneracy\n";
  double degeneracy_max = 0.0;
  for (const auto& u : samples) {
    const double n0 = inner_p(u, u, 0.0);
    if (n0 > 0.0) {
      degeneracy_max =
          std::max(degeneracy_max, std::abs(bilap_form(u, 0.0)) / (n0 * static_cast<double>(cfg.N)));
    }
  }
  const ABCSequences zero = abc_sequences(0.0, cfg.N + 4);
  double abc_zero_max = 0.0;
  for (std::size_t l = 0; l < zero.size(); ++l) {
    abc_zero_max = std::max({abc_zero_max, std::abs(zero.a[l]), std::abs(zero.b[l]), std::abs(zero.c[l])});
  }

  log << "[verify-monotonicity] constant estimate up to N=" << sweep_size(cfg.N) << "\n";
  const MonotonicityReport report = estimate_constant(cfg.p, std::nullopt, sweep_size(cfg.N), cfg.tol);

  // bilap_form(u) <= C |u|_p^2 on every sample.
  double worst_excess = -std::numeric_limits<double>::infinity();
  const SobolevWeights w(cfg.p, cfg.N);
  for (const auto& u : samples) {
    const double n2 = inner_p(u, u, w);
    if (n2 > 0.0) worst_excess = std::max(worst_excess, (bilap_form(u, cfg.p) - report.C_estimate * n2) / n2);
  }
  const bool holds = worst_excess <= 1e-9 * std::max(1.0, std::abs(report.C_estimate));

  log << "[verify-monotonicity] leading coefficients of f_j\n";
  a.results = json{{"p", cfg.p},
                   {"N", cfg.N},
                   {"samples", samples.size()},
                   {"identity_max_error", identity_max},
                   {"p0_form_max", degeneracy_max},
                   {"p0_abc_max", abc_zero_max},
                   {"C_estimate", report.C_estimate},
                   {"inequality_worst_excess", samples.empty() ? 0.0 : worst_excess},
                   {"inequality_holds", holds},
                   {"g_at_zero", g_values(cfg.p)},
                   {"constant", to_json(report)}};
  return a;
}

Artifacts estimate_constant_cmd(const RunConfig& cfg, std::ostream& log) {
  Artifacts a;
  std::optional<OperatorParams> params;
  if (cfg.form == FormKind::LA) params = cfg.params;
  log << "[estimate-constant] " << to_string(cfg.form) << " form, p=" << cfg.p << ", N up to " << sweep_size(cfg.N)
      << "\n";
  const MonotonicityReport report = estimate_constant(cfg.p, params, sweep_size(cfg.N), cfg.tol);
  a.results = to_json(report);
  std::string csv = "N,C_N\n";
  for (const auto& [n, c] : report.N_sweep) csv += std::to_string(n) + "," + format_number(c) + "\n";
  a.csv.emplace_back("constant_sweep.csv", std::move(csv));
  return a;
}

double gronwall_constant(const RunConfig& cfg, double p_check, std::ostream& log) {
  log << "[energy] constant for the (L, A) form at p=" << p_check << "\n";
  return estimate_constant(p_check, cfg.params, sweep_size(cfg.N), cfg.tol).C_estimate;
}

Artifacts solve_pde_cmd(const RunConfig& cfg, std::ostream& log) {
  Artifacts a;
  const CoeffVec psi = cfg.psi.build(cfg.N);
  const std::vector<double> grid = uniform_grid(cfg.T, cfg.dt);
  log << "[solve-pde] " << to_string(cfg.method) << ", N=" << cfg.N << ", " << grid.size() << " grid times\n";
  const PdeRun run = solve_pde(psi, cfg.params, cfg.p, cfg.N, grid, cfg.method);
  const double p_check = cfg.p - 2.0;
  const EnergyCheck check = semigroup_energy_check(run, gronwall_constant(cfg, p_check, log), p_check);
  a.results = pde_summary(run);
  a.results["energy"] = to_json(check);
  a.csv.emplace_back("pde.csv", pde_csv(run));
  return a;
}

PathEnsemble run_ensemble(const RunConfig& cfg, std::ostream& log) {
  const CoeffVec psi = cfg.psi.build(cfg.N);
  const std::vector<double> times = save_grid(cfg.T, cfg.dt, cfg.save_points);
  log << "[simulate] M=" << cfg.M << " paths, N=" << cfg.N << ", dt=" << cfg.dt << ", T=" << cfg.T << "\n";
  SimulationOptions options;
  options.threads = cfg.threads;
  PathEnsemble ens = simulate(psi, cfg.params, cfg.p, cfg.N, cfg.dt, cfg.T, cfg.M, cfg.seed, times, options);
  if (!ens.failures.empty()) log << "[simulate] " << ens.failures.size() << " paths failed\n";
  if (ens.successful_paths() < 2) throw NumericalError("simulate: fewer than two successful paths");
  return ens;
}

void add_path_csvs(const RunConfig& cfg, const PathEnsemble& ens, Artifacts& a) {
  if (!cfg.write_paths) return;
  for (std::size_t m = 0; m < ens.paths.size(); ++m) {
    if (ens.path_ok(m)) a.csv.emplace_back("path_" + std::to_string(m) + ".csv", path_csv(ens, m));
  }
}

Artifacts simulate_cmd(const RunConfig& cfg, std::ostream& log) {
  Artifacts a;
  const PathEnsemble ens = run_ensemble(cfg, log);
  const double p_check = cfg.p - 2.0;
  a.results = ensemble_summary(ens);
  a.results["energy"] = to_json(energy_report(ens, gronwall_constant(cfg, p_check, log), p_check));
  add_path_csvs(cfg, ens, a);
  return a;
}

Artifacts mc_compare_cmd(const RunConfig& cfg, std::ostream& log) {
  Artifacts a;
  const PathEnsemble ens = run_ensemble(cfg, log);
  const std::vector<double> grid = uniform_grid(cfg.T, cfg.dt);
  log << "[mc-compare] implicit-euler reference on " << grid.size() << " grid times\n";
  const PdeRun ref = solve_pde(cfg.psi.build(cfg.N), cfg.params, cfg.p, cfg.N, grid, TimeMethod::implicit_euler);
  const double q = cfg.p - 2.0;

  json per_time = json::array();
  McGap final_gap;
  for (std::size_t k = 0; k < ens.t_grid.size(); ++k) {
    const auto step = static_cast<std::size_t>(std::llround(ens.t_grid[k] / cfg.dt));
    const McGap g = mc_gap(mc_mean(ens, k), ref.states.at(step), q);
    json entry = to_json(g);
    entry["t"] = ens.t_grid[k];
    per_time.push_back(entry);
    final_gap = g;
  }
  const EnergyReport energy = energy_report(ens, gronwall_constant(cfg, q, log), q);
  a.results = json{{"params", to_json(cfg.params)},
                   {"p", cfg.p},
                   {"q", q},
                   {"N", cfg.N},
                   {"M", cfg.M},
                   {"successful_paths", ens.successful_paths()},
                   {"gap", final_gap.gap},
                   {"aggregate_se", final_gap.aggregate_se},
                   {"gap_over_se", final_gap.gap_over_se},
                   {"times", per_time},
                   {"energy", to_json(energy)}};
  add_path_csvs(cfg, ens, a);
  return a;
}

/// Integers 10 = k_0 < k_1 < ... <= k_max, twenty per decade.
std::vector<std::size_t> log_spaced(std::size_t k_max) {
  std::set<std::size_t> ks;
  const double decades = std::log10(static_cast<double>(k_max)) - 1.0;
  const auto points = static_cast<std::size_t>(std::ceil(decades * 20.0));
  for (std::size_t i = 0; i <= points; ++i) {
    const double k = std::round(std::pow(10.0, 1.0 + static_cast<double>(i) / 20.0));
    ks.insert(std::min(k_max, static_cast<std::size_t>(k)));
  }
  ks.insert(k_max);
  return {ks.begin(), ks.end()};
}

Artifacts abc_tables_cmd(const RunConfig& cfg, std::ostream& log) {
  Artifacts a;
  log << "[abc-tables] sequences for l <= " << cfg.l_max << "\n";
  const ABCSequences seqs = abc_sequences(cfg.p, cfg.l_max + 1);
  double sup_abc = 0.0;
  for (std::size_t l = 0; l < seqs.size(); ++l) {
    sup_abc = std::max({sup_abc, std::abs(seqs.a[l]), std::abs(seqs.b[l]), std::abs(seqs.c[l])});
  }

  log << "[abc-tables] scaled f_j for 10 <= k <= " << cfg.k_max << "\n";
  std::string f_csv = "k,k2_f1,k2_f2,k_f3,k_f4\n";
  std::array<double, 4> sup{};
  std::array<double, 4> last{};
  for (std::size_t k : log_spaced(cfg.k_max)) {
    const double kd = static_cast<double>(k);
    const FValues f = f_functions(1.0 / kd, cfg.p);
    last = {kd * kd * f.f1, kd * kd * f.f2, kd * f.f3, kd * f.f4};
    f_csv += std::to_string(k);
    for (std::size_t j = 0; j < 4; ++j) {
      sup[j] = std::max(sup[j], std::abs(last[j]));
      f_csv += "," + format_number(last[j]);
    }
    f_csv += "\n";
  }

  json g = g_values(cfg.p);
  json rel = json::array();
  for (std::size_t j = 0; j < 4; ++j) {
    const double gj = g[j].get<double>();
    rel.push_back(std::abs(last[j] - gj) / std::max(std::abs(gj), 1e-300));
  }
  a.results = json{{"p", cfg.p},
                   {"l_max", cfg.l_max},
                   {"k_max", cfg.k_max},
                   {"a_last", seqs.a.back()},
                   {"b_last", seqs.b.back()},
                   {"c_last", seqs.c.back()},
                   {"sup_abs_abc", sup_abc},
                   {"sup_scaled_f", sup},
                   {"scaled_f_at_k_max", last},
                   {"g_at_zero", g},
                   {"relative_gap_to_g", rel}};
  a.csv.emplace_back("abc.csv", abc_csv(seqs));
  a.csv.emplace_back("f_series.csv", std::move(f_csv));
  return a;
}

Artifacts dispatch(const RunConfig& cfg, std::ostream& log) {
  cfg.params.validate();
  switch (cfg.command) {
    case Command::verify_monotonicity: return verify_monotonicity(cfg, log);
    case Command::estimate_constant: return estimate_constant_cmd(cfg, log);
    case Command::solve_pde: return solve_pde_cmd(cfg, log);
    case Command::simulate_spde: return simulate_cmd(cfg, log);
    case Command::mc_compare: return mc_compare_cmd(cfg, log);
    case Command::abc_tables: return abc_tables_cmd(cfg, log);
  }
  throw std::logic_error("unhandled command");
}

void write_report(const RunConfig& cfg, const std::string& status, const json& results, const std::string& message) {
  json report{{"schema", kReportSchema},
              {"command", to_string(cfg.command)},
              {"config", cfg.to_json()},
              {"generated_at", utc_timestamp()},
              {"status", status},
              {"results", results}};
  if (!message.empty()) report["error"] = message;
  assert_all_finite(report);
  write_file_atomic(cfg.output_dir / "report.json", report.dump(2) + "\n");
}

}  // namespace

std::vector<double> save_grid(double T, double dt, std::size_t save_points) {
  if (!(dt > 0.0)) throw std::invalid_argument("save_grid: dt must be positive");
  if (save_points == 0) throw std::invalid_argument("save_grid: save_points must be positive");
  const auto steps = static_cast<std::size_t>(std::llround(T / dt));
  std::vector<double> times{0.0};
  for (std::size_t i = 1; i <= save_points; ++i) {
    const std::size_t s = (steps * i) / save_points;
    if (s > 0 && static_cast<double>(s) * dt > times.back()) times.push_back(static_cast<double>(s) * dt);
  }
  return times;
}

json compute_results(const RunConfig& config, std::ostream& log) { return dispatch(config, log).results; }

int run(const RunConfig& config, std::ostream& log) {
  try {
    std::filesystem::create_directories(config.output_dir);
  } catch (const std::exception& e) {
    log << "error: cannot create output directory: " << e.what() << "\n";
    return exit_io_error;
  }

  std::string status = "ok";
  std::string message;
  int code = exit_ok;
  Artifacts artifacts;
  try {
    artifacts = dispatch(config, log);
    assert_all_finite(artifacts.results);
  } catch (const NumericalError& e) {
    status = "numerical_error";
    message = e.what();
    code = exit_numerical;
  } catch (const std::invalid_argument& e) {
    status = "validation_error";
    message = e.what();
    code = exit_validation;
  } catch (const std::out_of_range& e) {
    status = "validation_error";
    message = e.what();
    code = exit_validation;
  } catch (const std::logic_error& e) {
    // Non-finite values in the results; nothing usable to write.
    status = "numerical_error";
    message = e.what();
    code = exit_numerical;
  }
  if (code != exit_ok) {
    log << "error: " << message << "\n";
    artifacts = Artifacts{};
  }

  try {
    if (code == exit_ok && config.format != OutputFormat::json) {
      for (const auto& [name, contents] : artifacts.csv) write_file_atomic(config.output_dir / name, contents);
    }
    if (code == exit_ok && config.format == OutputFormat::both) {
      write_file_atomic(config.output_dir / "results.json", artifacts.results.dump(2) + "\n");
    }
    write_report(config, status, artifacts.results, message);
  } catch (const std::exception& e) {
    log << "error: writing outputs failed: " << e.what() << "\n";
    return code == exit_ok ? exit_io_error : code;
  }
  log << "[done] " << (config.output_dir / "report.json").string() << " (" << status << ")\n";
  return code;
}

}  // namespace hspde
