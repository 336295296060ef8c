#pragma once

#include <ostream>

#include "json.hpp"

#include "hspde/config.hpp"

namespace hspde {

inline constexpr int kReportSchema = 1;

enum ExitCode : int { exit_ok = 0, exit_io_error = 1, exit_validation = 2, exit_numerical = 3 };

/// Runs the configured command and writes report.json (plus CSVs per
/// `format`) into `output_dir`. Logs one line per stage. Returns an
/// ExitCode; failures still produce a report with a non-"ok" status when the
/// output directory is writable.
int run(const RunConfig& config, std::ostream& log);

/// The `results` object of a command without touching the disk.
nlohmann::json compute_results(const RunConfig& config, std::ostream& log);

/// Sample times used by simulate-spde and mc-compare: 0 and `save_points`
/// evenly spread multiples of dt ending at T.
std::vector<double> save_grid(double T, double dt, std::size_t save_points);

}  // namespace hspde
