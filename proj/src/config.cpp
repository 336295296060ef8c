#include "hspde/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

namespace hspde {

using nlohmann::json;

namespace {

constexpr std::size_t kQuadratureFloor = 256;

double get_real(const json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError(key, "expected a real number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(key, "expected a finite real number");
  return v;
}

std::uint64_t get_uint(const json& j, const std::string& key, const std::string& constraint) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) {
    if (j.get<std::int64_t>() < 0) throw ConfigError(key, "must satisfy " + constraint);
    return static_cast<std::uint64_t>(j.get<std::int64_t>());
  }
  throw ConfigError(key, "expected an integer (" + constraint + ")");
}

std::string get_string(const json& j, const std::string& key) {
  if (!j.is_string()) throw ConfigError(key, "expected a string");
  return j.get<std::string>();
}

Command command_from_string(const std::string& s) {
  static const std::pair<const char*, Command> table[] = {
      {"verify-monotonicity", Command::verify_monotonicity}, {"estimate-constant", Command::estimate_constant},
      {"solve-pde", Command::solve_pde},                     {"simulate-spde", Command::simulate_spde},
      {"mc-compare", Command::mc_compare},                   {"abc-tables", Command::abc_tables}};
  for (const auto& [name, cmd] : table) {
    if (s == name) return cmd;
  }
  throw ConfigError("command",
                    "unknown command '" + s +
                        "' (expected verify-monotonicity, estimate-constant, solve-pde, simulate-spde, mc-compare or "
                        "abc-tables)");
}

}  // namespace

const char* to_string(Command command) {
  switch (command) {
    case Command::verify_monotonicity: return "verify-monotonicity";
    case Command::estimate_constant: return "estimate-constant";
    case Command::solve_pde: return "solve-pde";
    case Command::simulate_spde: return "simulate-spde";
    case Command::mc_compare: return "mc-compare";
    case Command::abc_tables: return "abc-tables";
  }
  return "unknown";
}

const char* to_string(OutputFormat format) {
  switch (format) {
    case OutputFormat::json: return "json";
    case OutputFormat::csv: return "csv";
    case OutputFormat::both: return "both";
  }
  return "unknown";
}

json PsiSpec::to_json() const {
  switch (kind) {
    case Kind::unit0: return "e0";
    case Kind::gaussian: {
      std::ostringstream os;
      os.precision(17);
      os << "gaussian(" << s << ")";
      return os.str();
    }
    case Kind::coefficients: return json(coefficients);
  }
  return nullptr;
}

CoeffVec PsiSpec::build(std::size_t N) const {
  switch (kind) {
    case Kind::unit0: return CoeffVec::unit(N, 0);
    case Kind::gaussian: {
      const double sd = s;
      const auto density = [sd](double x) {
        return std::exp(-0.5 * x * x / (sd * sd)) / (sd * std::sqrt(2.0 * 3.14159265358979323846));
      };
      const std::size_t nodes = std::min(kMaxQuadratureNodes, std::max(kQuadratureFloor, 2 * N));
      return project(density, N, gauss_hermite_rule(nodes));
    }
    case Kind::coefficients:
      if (coefficients.size() > N) throw ConfigError("psi", "more coefficients than N");
      return CoeffVec(coefficients).resized(N);
  }
  return CoeffVec(N);
}

PsiSpec parse_psi(const json& value) {
  PsiSpec spec;
  json list;
  if (value.is_array()) {
    list = value;
  } else if (value.is_string()) {
    const std::string text = value.get<std::string>();
    if (text == "e0") return spec;
    static const std::regex gaussian(R"(^\s*gaussian\(\s*([-+0-9.eE]+)\s*\)\s*$)");
    std::smatch m;
    if (std::regex_match(text, m, gaussian)) {
      double s = 0.0;
      try {
        s = std::stod(m[1].str());
      } catch (const std::exception&) {
        throw ConfigError("psi", "gaussian(s) needs a numeric s");
      }
      if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("psi", "gaussian(s) needs s > 0");
      spec.kind = PsiSpec::Kind::gaussian;
      spec.s = s;
      return spec;
    }
    const std::string trimmed = text.find('[') == std::string::npos ? "[" + text + "]" : text;
    try {
      list = json::parse(trimmed);
    } catch (const json::exception&) {
      throw ConfigError("psi", "expected \"e0\", \"gaussian(s)\" or a list of coefficients");
    }
  } else {
    throw ConfigError("psi", "expected \"e0\", \"gaussian(s)\" or a list of coefficients");
  }
  if (!list.is_array() || list.empty()) throw ConfigError("psi", "coefficient list must be a nonempty array");
  spec.kind = PsiSpec::Kind::coefficients;
  for (const auto& v : list) spec.coefficients.push_back(get_real(v, "psi"));
  return spec;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "command", "kappa", "sigma", "b",   "p",     "N",       "M",           "dt",      "T",          "seed", "psi",
      "out",     "format", "method", "form", "tol", "samples", "l_max", "k_max", "save_points", "threads", "write_paths"};
  return keys;
}

RunConfig parse_config(const json& file, const json& overrides) {
  if (!file.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  if (!overrides.is_object()) throw ConfigError("<root>", "overrides must be a JSON object");
  json merged = file;
  merged.update(overrides);

  const auto& keys = config_keys();
  for (const auto& [key, _] : merged.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw ConfigError(key, "unknown key");
  }

  RunConfig cfg;
  if (!merged.contains("command")) throw ConfigError("command", "missing (e.g. \"solve-pde\")");
  cfg.command = command_from_string(get_string(merged["command"], "command"));

  if (merged.contains("kappa")) cfg.params.kappa = get_real(merged["kappa"], "kappa");
  if (merged.contains("sigma")) cfg.params.sigma = get_real(merged["sigma"], "sigma");
  if (merged.contains("b")) cfg.params.b = get_real(merged["b"], "b");
  if (merged.contains("p")) cfg.p = get_real(merged["p"], "p");
  if (merged.contains("N")) {
    cfg.N = get_uint(merged["N"], "N", "N >= 1");
    if (cfg.N < 1) throw ConfigError("N", "must satisfy N >= 1");
  }
  if (merged.contains("M")) {
    cfg.M = get_uint(merged["M"], "M", "M >= 1");
    if (cfg.M < 1) throw ConfigError("M", "must satisfy M >= 1");
  }
  if (merged.contains("dt")) {
    cfg.dt = get_real(merged["dt"], "dt");
    if (!(cfg.dt > 0.0)) throw ConfigError("dt", "must satisfy dt > 0");
  }
  if (merged.contains("T")) {
    cfg.T = get_real(merged["T"], "T");
    if (!(cfg.T >= 0.0)) throw ConfigError("T", "must satisfy T >= 0");
  }
  if (merged.contains("seed")) cfg.seed = get_uint(merged["seed"], "seed", "seed >= 0");
  if (merged.contains("psi")) cfg.psi = parse_psi(merged["psi"]);
  if (merged.contains("out")) cfg.output_dir = get_string(merged["out"], "out");
  if (merged.contains("format")) {
    const std::string f = get_string(merged["format"], "format");
    if (f == "json") cfg.format = OutputFormat::json;
    else if (f == "csv") cfg.format = OutputFormat::csv;
    else if (f == "both") cfg.format = OutputFormat::both;
    else throw ConfigError("format", "expected json, csv or both");
  }
  if (merged.contains("method")) {
    try {
      cfg.method = time_method_from_string(get_string(merged["method"], "method"));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError("method", e.what());
    }
  }
  if (merged.contains("form")) {
    const std::string f = get_string(merged["form"], "form");
    if (f == "bilaplacian") cfg.form = FormKind::bilaplacian;
    else if (f == "LA") cfg.form = FormKind::LA;
    else throw ConfigError("form", "expected bilaplacian or LA");
  }
  if (merged.contains("tol")) {
    cfg.tol = get_real(merged["tol"], "tol");
    if (!(cfg.tol > 0.0)) throw ConfigError("tol", "must satisfy tol > 0");
  }
  if (merged.contains("samples")) {
    cfg.samples = get_uint(merged["samples"], "samples", "samples >= 1");
    if (cfg.samples < 1) throw ConfigError("samples", "must satisfy samples >= 1");
  }
  if (merged.contains("l_max")) cfg.l_max = get_uint(merged["l_max"], "l_max", "l_max >= 0");
  if (merged.contains("k_max")) {
    cfg.k_max = get_uint(merged["k_max"], "k_max", "k_max >= 10");
    if (cfg.k_max < 10) throw ConfigError("k_max", "must satisfy k_max >= 10");
  }
  if (merged.contains("save_points")) {
    cfg.save_points = get_uint(merged["save_points"], "save_points", "save_points >= 1");
    if (cfg.save_points < 1) throw ConfigError("save_points", "must satisfy save_points >= 1");
  }
  if (merged.contains("threads")) {
    const auto t = get_uint(merged["threads"], "threads", "1 <= threads <= 256");
    if (t < 1 || t > 256) throw ConfigError("threads", "must satisfy 1 <= threads <= 256");
    cfg.threads = static_cast<unsigned>(t);
  }
  if (merged.contains("write_paths")) {
    if (!merged["write_paths"].is_boolean()) throw ConfigError("write_paths", "expected true or false");
    cfg.write_paths = merged["write_paths"].get<bool>();
  }
  return cfg;
}

json RunConfig::to_json() const {
  return json{{"command", to_string(command)},
              {"kappa", params.kappa},
              {"sigma", params.sigma},
              {"b", params.b},
              {"p", p},
              {"N", N},
              {"M", M},
              {"dt", dt},
              {"T", T},
              {"seed", seed},
              {"psi", psi.to_json()},
              {"out", output_dir.string()},
              {"format", hspde::to_string(format)},
              {"method", hspde::to_string(method)},
              {"form", hspde::to_string(form)},
              {"tol", tol},
              {"samples", samples},
              {"l_max", l_max},
              {"k_max", k_max},
              {"save_points", save_points},
              {"threads", threads},
              {"write_paths", write_paths}};
}

json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace hspde
