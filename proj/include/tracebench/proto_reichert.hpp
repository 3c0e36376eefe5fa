#pragma once

#include <string>
#include <vector>

#include "tracebench/core.hpp"
#include "tracebench/party_view.hpp"

namespace tracebench {

/// A location fix on the tick grid; t.index is the tick number.
struct GeoTimePoint {
  TimeInterval t;
  GeoPoint point;
  bool operator==(const GeoTimePoint&) const = default;
};

struct RchThresholds {
  Seconds time_s = 900;
  double dist_m = 2.0;
};

// Cost model for the garbled-circuit matching this module emulates. One
// comparison checks a time difference and two coordinate differences.
inline constexpr std::uint64_t kRchBitWidth = 64;
inline constexpr std::uint64_t kGatesPerComparison = 3 * kRchBitWidth;
inline constexpr std::uint64_t kBytesPerGate = 32;

struct CostEstimate {
  std::uint64_t comparisons = 0;
  std::uint64_t estimated_gates = 0;
  std::uint64_t estimated_bytes = 0;
  bool operator==(const CostEstimate&) const = default;
};

struct MatchingJob {
  std::string victim;
  std::vector<GeoTimePoint> points;
  RchThresholds thresholds;
  /// Cost against a single requester point.
  CostEstimate cost;
};

struct HAState {
  std::vector<MatchingJob> jobs;
  PartyView view{"ha"};
};

/// Stores the points verbatim; the HA's view gains every one of them.
/// Throws ConfigError for non-positive thresholds.
const MatchingJob& rch_ingest(HAState& ha, const std::string& victim, std::vector<GeoTimePoint> points,
                              const RchThresholds& thresholds, std::uint64_t event_id = 0);

/// Throws ArgumentError when either size is zero.
CostEstimate rch_cost(const MatchingJob& job, std::size_t requester_size);

struct RchSession {
  bool flag = false;
  CostEstimate cost;
  std::uint64_t messages = 0;
  std::uint64_t bytes = 0;
};

/// flag = some pair of points is within thresholds.time_s in time and
/// thresholds.dist_m in space. Pure; the requester learns only the flag.
RchSession rch_match(const MatchingJob& job, const std::vector<GeoTimePoint>& requester_points);

}  // namespace tracebench
