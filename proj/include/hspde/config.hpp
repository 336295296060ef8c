#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "hspde/hermite.hpp"
#include "hspde/monotonicity.hpp"
#include "hspde/operators.hpp"
#include "hspde/pde_solver.hpp"

namespace hspde {

enum class Command { verify_monotonicity, estimate_constant, solve_pde, simulate_spde, mc_compare, abc_tables };
enum class OutputFormat { json, csv, both };

const char* to_string(Command command);
const char* to_string(OutputFormat format);

/// Validation failure; `key()` names the offending configuration key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::invalid_argument("config key '" + key + "': " + message), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Initial condition: "e0", "gaussian(s)" (density of N(0, s^2)) or an
/// inline coefficient list.
struct PsiSpec {
  enum class Kind { unit0, gaussian, coefficients };
  Kind kind = Kind::unit0;
  double s = 1.0;
  std::vector<double> coefficients;

  /// Canonical text form ("e0", "gaussian(1)", or a JSON array).
  nlohmann::json to_json() const;
  CoeffVec build(std::size_t N) const;
};

PsiSpec parse_psi(const nlohmann::json& value);

struct RunConfig {
  Command command = Command::solve_pde;
  OperatorParams params{1.0, 1.0, 0.0};
  double p = 1.0;
  std::size_t N = 64;
  std::size_t M = 1000;
  double dt = 1e-3;
  double T = 0.25;
  std::uint64_t seed = 0;
  PsiSpec psi;
  std::filesystem::path output_dir = ".";
  OutputFormat format = OutputFormat::json;

  // Command-specific knobs.
  TimeMethod method = TimeMethod::matrix_exponential;  // solve-pde
  FormKind form = FormKind::LA;                        // estimate-constant
  double tol = 1e-3;                                   // estimate-constant convergence
  std::size_t samples = 100;                           // verify-monotonicity random vectors
  std::size_t l_max = 1000;                            // abc-tables
  std::size_t k_max = 1000000;                         // abc-tables f_j series
  std::size_t save_points = 10;                        // simulate-spde / mc-compare
  unsigned threads = 1;
  bool write_paths = false;

  nlohmann::json to_json() const;
};

/// Keys accepted in a config file or as overrides.
const std::vector<std::string>& config_keys();

/// Merges `overrides` over `file` (both JSON objects) and validates.
/// Throws ConfigError naming the key for unknown keys, type mismatches and
/// constraint violations.
RunConfig parse_config(const nlohmann::json& file, const nlohmann::json& overrides = nlohmann::json::object());

nlohmann::json load_config_file(const std::filesystem::path& path);

}  // namespace hspde
