#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "hspde/app.hpp"
#include "hspde/config.hpp"

namespace {

using nlohmann::json;

/// Flag text as JSON: numbers, booleans and arrays parse as such, anything
/// else stays a string. Type errors surface from parse_config with the key.
json flag_value(const std::string& text) {
  try {
    json v = json::parse(text);
    if (v.is_number() || v.is_boolean() || v.is_array()) return v;
  } catch (const json::exception&) {
  }
  return text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hermite-spectral solver and simulator for fourth-order linear (S)PDEs"};
  app.set_help_flag("-h,--help", "Print help and exit");

  std::string command;
  std::optional<std::string> config_file;
  app.add_option("command", command,
                 "verify-monotonicity | estimate-constant | solve-pde | simulate-spde | mc-compare | abc-tables")
      ->required();
  app.add_option("--config", config_file, "JSON config file; flags override its values");

  struct Flag {
    const char* key;
    const char* help;
  };
  const Flag flags[] = {
      {"p", "Sobolev index (default 1)"},
      {"N", "Galerkin truncation, N >= 1 (default 64)"},
      {"kappa", "bilaplacian coefficient (default 1)"},
      {"sigma", "second-order coefficient (default 1)"},
      {"b", "transport coefficient (default 0)"},
      {"dt", "time step, > 0 (default 1e-3)"},
      {"T", "final time, >= 0 (default 0.25)"},
      {"M", "Monte-Carlo paths, >= 1 (default 1000)"},
      {"seed", "master seed, nonnegative integer (default 0)"},
      {"psi", "initial condition: e0 | gaussian(s) | c0,c1,... (default e0)"},
      {"out", "output directory (default .)"},
      {"format", "json | csv | both (default json)"},
      {"method", "matrix-exponential | crank-nicolson | implicit-euler (default matrix-exponential)"},
      {"form", "bilaplacian | LA for estimate-constant (default LA)"},
      {"tol", "constant convergence tolerance (default 1e-3)"},
      {"samples", "random vectors for verify-monotonicity (default 100)"},
      {"l_max", "largest l in abc-tables (default 1000)"},
      {"k_max", "largest k of the f_j series, >= 10 (default 1000000)"},
      {"save_points", "saved times after 0 for simulations (default 10)"},
      {"threads", "worker threads for Monte Carlo, 1..256 (default 1)"},
      {"write_paths", "write one CSV per path: true | false (default false)"},
  };
  std::map<std::string, std::optional<std::string>> values;
  for (const auto& f : flags) {
    values[f.key];
    app.add_option(std::string("--") + f.key, values[f.key], f.help);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return hspde::exit_validation;
  }

  hspde::RunConfig config;
  try {
    json file = config_file ? hspde::load_config_file(*config_file) : json::object();
    json overrides{{"command", command}};
    for (const auto& [key, value] : values) {
      if (!value) continue;
      overrides[key] = (key == "psi" || key == "out") ? json(*value) : flag_value(*value);
    }
    config = hspde::parse_config(file, overrides);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return hspde::exit_validation;
  }
  return hspde::run(config, std::cerr);
}
