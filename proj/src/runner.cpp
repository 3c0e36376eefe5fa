#include <fstream>

#include "tracebench/core.hpp"
#include "tracebench/log.hpp"
#include "tracebench/metrics.hpp"
#include "tracebench/simulation.hpp"

namespace tracebench {

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

}  // namespace

nlohmann::json simulate_to_dir(const ScenarioConfig& config, const std::filesystem::path& dir, RunPaths* paths) {
  std::filesystem::create_directories(dir);
  RunPaths p;
  p.event_log = dir / config.output.event_log;
  p.report = dir / config.output.report;
  p.effective_config = dir / "config.effective.json";
  {
    auto out = open_out(p.effective_config);
    out << to_json(config).dump(2) << '\n';
  }
  {
    auto log = open_out(p.event_log);
    if (config.protocol.kind == ProtocolKind::kDP3T) {
      p.publications = dir / "publications.jsonl";
      auto pubs = open_out(p.publications);
      run_simulation(config, log, &pubs);
    } else {
      run_simulation(config, log);
    }
    if (!log.flush()) throw std::runtime_error("failed writing " + p.event_log.string());
  }
  std::ifstream in(p.event_log, std::ios::binary);
  const nlohmann::json report = report_from_log(in, p.event_log.filename().string());
  auto out = open_out(p.report);
  out << render_report(report);
  log_info("wrote " + p.report.string());
  if (paths) *paths = p;
  return report;
}

}  // namespace tracebench
