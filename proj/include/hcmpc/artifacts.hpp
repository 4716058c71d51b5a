#pragma once

#include "hcmpc/config.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace hcmpc {

inline constexpr const char* kToolVersion = "hcmpc 1.0.0";

[[nodiscard]] nlohmann::json bound_report_json(const BoundReport& r);

/// Minimum of every named safety metric over the recorded states (empty when the
/// model defines none).
[[nodiscard]] std::map<std::string, double> safety_minima(const ClosedLoopRun& run);

/// steps.csv and summary.json for one closed-loop run. `row.steps` supplies the
/// per-step online alpha; steps without an analysis report NA.
void write_simulation(const std::filesystem::path& dir, const ScenarioConfig& config, const SweepRow& row);

/// rows.csv, bounds.json, plot_N<N>.csv per prediction horizon and, for the
/// quadrotor, one trajectory CSV per pair.
void write_sweep(const std::filesystem::path& dir, const ScenarioConfig& config, const std::vector<SweepRow>& rows);

/// Regenerates the plot CSVs from a stored bounds.json document. Returns the files written.
std::vector<std::filesystem::path> render_plots(const nlohmann::json& bounds, const std::filesystem::path& dir);

}  // namespace hcmpc
