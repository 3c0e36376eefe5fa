#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace tracebench {

/// Everything the metrics need, gathered from one event log. Built only by
/// read_run; nothing here comes from live simulator state.
struct RunData {
  struct Encounter {
    std::uint32_t a = 0, b = 0;
    std::int64_t start_s = 0, end_s = 0;
    bool walled = false;
  };
  struct Report {
    std::uint32_t user = 0;
    std::int64_t time_s = 0;
    std::int64_t window_start_s = 0;
  };
  struct Alert {
    std::uint32_t reporter = 0, contact = 0;
    std::string origin;
  };
  struct Transmission {
    std::uint32_t source = 0, target = 0;
    std::int64_t time_s = 0;
    std::string mode;
  };
  struct Message {
    std::string from, to, kind;
    std::uint64_t count = 0, bytes = 0;
  };

  nlohmann::json config;
  std::string config_hash;
  std::string protocol;
  std::uint64_t seed = 0;
  std::uint32_t n_users = 0;
  std::int64_t min_duration_s = 0;
  std::int64_t coverage_interval_s = 0;
  double noise_sigma_db = 0.0;

  std::vector<Encounter> encounters;
  std::vector<Report> reports;
  std::vector<Alert> alerts;
  std::vector<Transmission> transmissions;
  std::set<std::string> radio_contacts;  // pair subjects
  /// party -> kind -> subjects
  std::map<std::string, std::map<std::string, std::set<std::string>>> facts;
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> disclosed_points;  // party -> (points, located)
  std::vector<nlohmann::json> findings;
  std::vector<nlohmann::json> forgeries;
  std::vector<nlohmann::json> anomalies;
  std::vector<nlohmann::json> injections;
  std::vector<Message> messages;
  std::optional<nlohmann::json> matching_cost;
  std::string final_chain;
};

/// Reads and verifies a whole log. Throws LogError on damage.
RunData read_run(std::istream& log, const std::string& name);

nlohmann::json compute_utility(const RunData& run);
nlohmann::json compute_privacy(const RunData& run);
nlohmann::json compute_authenticity(const RunData& run);
nlohmann::json compute_cost(const RunData& run);

/// The full RunReport. Zero-denominator rates are null.
nlohmann::json compute_report(const RunData& run);
nlohmann::json report_from_log(std::istream& log, const std::string& name);

/// Canonical text form: sorted keys, two-space indent, trailing newline.
std::string render_report(const nlohmann::json& report);

struct CompareTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

/// One row per report plus a totals row for the additive columns. Throws
/// ArgumentError when the reports were not run on the same world unless
/// `force` is set.
CompareTable compare_reports(const std::vector<nlohmann::json>& reports, bool force = false);
std::string to_csv(const CompareTable& table);
std::string to_markdown(const CompareTable& table);

}  // namespace tracebench
