#include "hspde/serialize.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <system_error>

namespace hspde {

namespace {

void append_number(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

void append_row(std::string& out, double t, const CoeffVec& u) {
  append_number(out, t);
  for (double c : u.values()) {
    out.push_back(',');
    append_number(out, c);
  }
  out.push_back('\n');
}

std::string coefficient_header(std::size_t n) {
  std::string header = "t";
  for (std::size_t i = 0; i < n; ++i) header += ",c" + std::to_string(i);
  header.push_back('\n');
  return header;
}

void check_finite(const json& j, const std::string& pointer) {
  if (j.is_number_float()) {
    if (!std::isfinite(j.get<double>())) throw std::logic_error("non-finite number in report at " + pointer);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) check_finite(j[i], pointer + "/" + std::to_string(i));
  } else if (j.is_object()) {
    for (const auto& [key, value] : j.items()) check_finite(value, pointer + "/" + key);
  }
}

}  // namespace

json to_json(const CoeffVec& u) { return json(u.vector()); }

CoeffVec coeffvec_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("CoeffVec JSON must be an array of numbers");
  std::vector<double> values;
  values.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw std::invalid_argument("CoeffVec JSON must be an array of numbers");
    values.push_back(v.get<double>());
  }
  return CoeffVec(std::move(values));
}

json to_json(const BandMatrix& m) {
  json bands = json::object();
  for (const auto& [d, values] : m.bands()) bands[std::to_string(d)] = values;
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"bands", bands}};
}

BandMatrix band_matrix_from_json(const json& j) {
  BandMatrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  for (const auto& [key, values] : j.at("bands").items()) {
    const int d = std::stoi(key);
    const auto vals = values.get<std::vector<double>>();
    if (vals.size() != m.cols()) throw std::invalid_argument("BandMatrix JSON: band length differs from cols");
    for (std::size_t c = 0; c < vals.size(); ++c) {
      const long long r = static_cast<long long>(c) + d;
      if (r >= 0 && r < static_cast<long long>(m.rows())) {
        m.set(d, c, vals[c]);
      } else if (vals[c] != 0.0) {
        throw std::invalid_argument("BandMatrix JSON: nonzero entry outside the matrix");
      }
    }
  }
  return m;
}

json to_json(const OperatorParams& params) {
  return json{{"kappa", params.kappa}, {"sigma", params.sigma}, {"b", params.b}};
}

json to_json(const MonotonicityReport& report) {
  json sweep = json::array();
  for (const auto& [n, c] : report.N_sweep) sweep.push_back(json{{"N", n}, {"C_N", c}});
  json j{{"p", report.p},
         {"form", to_string(report.form)},
         {"N", report.N},
         {"tol", report.tol},
         {"form_bilap", report.form_bilap},
         {"form_LA", report.form_LA ? json(*report.form_LA) : json(nullptr)},
         {"C_estimate", report.C_estimate},
         {"N_sweep", sweep},
         {"converged", report.converged},
         {"maximizer", to_json(report.maximizer)},
         {"power_iterations", report.power_iterations}};
  j["params"] = report.params ? to_json(*report.params) : json(nullptr);
  return j;
}

json to_json(const ABCSequences& seqs) { return json{{"p", seqs.p}, {"a", seqs.a}, {"b", seqs.b}, {"c", seqs.c}}; }

json pde_summary(const PdeRun& run) {
  const SobolevWeights wp(run.p, run.N);
  const SobolevWeights wq(run.p - 2.0, run.N);
  json times = json::array();
  for (std::size_t k = 0; k < run.states.size(); ++k) {
    times.push_back(json{{"t", run.t_grid[k]},
                         {"norm_p", norm_p(run.states[k], wp)},
                         {"norm_p_minus_2", norm_p(run.states[k], wq)},
                         {"integral_residual", run.integral_residuals[k]}});
  }
  return json{{"params", to_json(run.params)},
              {"p", run.p},
              {"N", run.N},
              {"method", to_string(run.method)},
              {"max_integral_residual", run.max_integral_residual()},
              {"final_state", to_json(run.states.back())},
              {"times", times}};
}

json to_json(const EnergyCheck& check) {
  return json{{"C", check.C},
              {"p_check", check.p_check},
              {"tol", check.tol},
              {"max_ratio", check.max_ratio},
              {"passed", check.passed}};
}

json ensemble_summary(const PathEnsemble& ens) {
  json times = json::array();
  const SobolevWeights wp(ens.p, ens.N);
  const SobolevWeights wq(ens.p - 2.0, ens.N);
  const bool enough = ens.successful_paths() >= 2;
  for (std::size_t k = 0; k < ens.t_grid.size(); ++k) {
    json entry{{"t", ens.t_grid[k]}};
    if (enough) {
      const McMean mm = mc_mean(ens, k);
      double sq_p = 0.0;
      double sq_q = 0.0;
      for (std::size_t m = 0; m < ens.paths.size(); ++m) {
        if (!ens.path_ok(m)) continue;
        sq_p += inner_p(ens.paths[m][k], ens.paths[m][k], wp);
        sq_q += inner_p(ens.paths[m][k], ens.paths[m][k], wq);
      }
      const double count = static_cast<double>(mm.paths);
      entry["mean"] = to_json(mm.mean);
      entry["se"] = to_json(mm.se);
      entry["mean_sq_norm_p"] = sq_p / count;
      entry["mean_sq_norm_p_minus_2"] = sq_q / count;
    }
    times.push_back(entry);
  }
  json failures = json::array();
  for (const auto& f : ens.failures) {
    failures.push_back(json{{"path", f.path_index}, {"step", f.step}, {"message", f.message}});
  }
  return json{{"params", to_json(ens.params)},
              {"p", ens.p},
              {"N", ens.N},
              {"dt", ens.dt},
              {"T", ens.T},
              {"M", ens.M},
              {"seed", ens.seed},
              {"successful_paths", ens.successful_paths()},
              {"failed_paths", failures},
              {"times", times}};
}

json to_json(const EnergyReport& report) {
  json times = json::array();
  for (std::size_t k = 0; k < report.ratios.size(); ++k) {
    times.push_back(json{{"mean_energy", report.mean_energy[k]},
                         {"se_energy", report.se_energy[k]},
                         {"envelope", report.envelope[k]},
                         {"ratio", report.ratios[k]}});
  }
  return json{{"C", report.C},
              {"p_check", report.p_check},
              {"worst_ratio", report.worst_ratio},
              {"passed", report.passed},
              {"times", times}};
}

json to_json(const McGap& gap) {
  return json{{"gap", gap.gap}, {"aggregate_se", gap.aggregate_se}, {"gap_over_se", gap.gap_over_se}};
}

std::string pde_csv(const PdeRun& run) {
  std::string out = coefficient_header(run.N);
  for (std::size_t k = 0; k < run.states.size(); ++k) append_row(out, run.t_grid[k], run.states[k]);
  return out;
}

std::string path_csv(const PathEnsemble& ens, std::size_t path) {
  std::string out = coefficient_header(ens.N);
  const auto& states = ens.paths.at(path);
  for (std::size_t k = 0; k < states.size(); ++k) append_row(out, ens.t_grid[k], states[k]);
  return out;
}

std::string abc_csv(const ABCSequences& seqs) {
  std::string out = "l,a_l,b_l,c_l\n";
  for (std::size_t l = 0; l < seqs.size(); ++l) {
    out += std::to_string(l);
    for (double v : {seqs.a[l], seqs.b[l], seqs.c[l]}) {
      out.push_back(',');
      append_number(out, v);
    }
    out.push_back('\n');
  }
  return out;
}

void assert_all_finite(const json& j) { check_finite(j, ""); }

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("cannot rename " + tmp.string() + ": " + ec.message());
}

}  // namespace hspde
