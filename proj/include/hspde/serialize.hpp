#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "hspde/band_matrix.hpp"
#include "hspde/hermite.hpp"
#include "hspde/monotonicity.hpp"
#include "hspde/pde_solver.hpp"
#include "hspde/spde_sim.hpp"

namespace hspde {

using nlohmann::json;

/// CoeffVec <-> JSON array of numbers (index order).
json to_json(const CoeffVec& u);
CoeffVec coeffvec_from_json(const json& j);

/// {"rows": R, "cols": C, "bands": {"<offset>": [values by column]}}.
json to_json(const BandMatrix& m);
BandMatrix band_matrix_from_json(const json& j);

json to_json(const OperatorParams& params);
json to_json(const MonotonicityReport& report);
json to_json(const ABCSequences& seqs);

/// Norms per grid time plus the integral-equation residuals.
json pde_summary(const PdeRun& run);
json to_json(const EnergyCheck& check);

/// Per save time: mean coefficients, standard errors, mean squared norms.
json ensemble_summary(const PathEnsemble& ens);
json to_json(const EnergyReport& report);
json to_json(const McGap& gap);

/// Rows "t,c0,c1,...". One row per grid time.
std::string pde_csv(const PdeRun& run);
/// Rows "t,c0,c1,..." for a single ensemble path.
std::string path_csv(const PathEnsemble& ens, std::size_t path);
std::string abc_csv(const ABCSequences& seqs);

/// Throws std::logic_error naming the JSON pointer of the first NaN/Inf.
void assert_all_finite(const json& j);

/// Writes to a temporary sibling and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace hspde
