#pragma once

#include <filesystem>
#include <ostream>

#include "json.hpp"
#include "tracebench/config.hpp"

namespace tracebench {

/// Runs the full pipeline for one scenario: trajectories, ground truth,
/// epidemic, then the tick loop (broadcast, attacks, sensing, reports) and
/// tracing. Everything observable is appended to `event_log`; the DP-3T
/// publication feed goes to `publications` when given. Deterministic in the
/// config.
void run_simulation(const ScenarioConfig& config, std::ostream& event_log, std::ostream* publications = nullptr);

struct RunPaths {
  std::filesystem::path event_log;
  std::filesystem::path report;
  std::filesystem::path effective_config;
  std::filesystem::path publications;  // empty unless the protocol is DP-3T
};

/// Simulates into `dir` (created if missing), then rebuilds the report from
/// the written log and stores it next to it. Returns the report.
nlohmann::json simulate_to_dir(const ScenarioConfig& config, const std::filesystem::path& dir, RunPaths* paths = nullptr);

}  // namespace tracebench
