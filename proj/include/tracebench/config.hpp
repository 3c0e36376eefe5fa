#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tracebench/adversary.hpp"
#include "tracebench/world.hpp"

namespace tracebench {

inline constexpr int kConfigSchemaVersion = 1;

enum class ProtocolKind { kTraceTogether, kDP3T, kAltuwaiyan, kReichert };

std::string to_string(ProtocolKind p);
ProtocolKind protocol_from_string(const std::string& s);
std::vector<ProtocolKind> all_protocols();

/// A point in local meters east/north of the world bounds origin.
struct LocalPoint {
  double east_m = 0.0;
  double north_m = 0.0;
};

struct BeaconConfig {
  std::string id;
  LocalPoint at;
};

struct WallConfig {
  LocalPoint a;
  LocalPoint b;
};

struct WorldConfig {
  std::size_t n_users = 50;
  Seconds horizon_s = 14 * kSecondsPerDay;
  Seconds tick_s = 60;
  /// Identifier rotation, bucket and contact-sampling interval.
  Seconds interval_s = 900;
  MobilityConfig mobility;
  RadioModel radio;
  EpidemicConfig epidemic;
  std::vector<BeaconConfig> beacons;
  std::vector<WallConfig> walls;
};

struct ThresholdsConfig {
  double close_distance_m = 2.0;
  Seconds min_duration_s = 900;
};

struct TraceTogetherParams {
  /// TID lifetime; a multiple of the world interval.
  Seconds tid_interval_s = 900;
};

struct DP3TParams {
  std::size_t ephids_per_day = 96;
  std::int64_t match_horizon_days = 14;
  bool publish_rotated_key = true;
};

struct AltuwaiyanParams {
  Seconds bucket_s = 900;
  unsigned message_bits = 64;
  /// Whether the server knows the infrastructure positions.
  bool static_map = true;
};

struct ReichertParams {
  Seconds tau_time_s = 900;
  double tau_dist_m = 2.0;
  double gps_noise_m = 0.0;
};

struct ProtocolConfig {
  ProtocolKind kind = ProtocolKind::kDP3T;
  TraceTogetherParams tracetogether;
  DP3TParams dp3t;
  AltuwaiyanParams altuwaiyan;
  ReichertParams reichert;
};

struct TimeWindow {
  Seconds start_s = 0;
  std::optional<Seconds> end_s;  // exclusive; open = whole run
  bool contains(Seconds t) const { return t >= start_s && (!end_s || t < *end_s); }
};

struct RelayAttackConfig {
  LocalPoint endpoint_a;
  LocalPoint endpoint_b;
  double range_m = 10.0;
  std::size_t latency_ticks = 0;
  TimeWindow active;
};

struct ExtenderAttackConfig {
  LocalPoint center;
  double radius_m = 50.0;
  double rssi_dbm = kExtenderRssiDbm;
  TimeWindow active;
};

struct TargetedAttackConfig {
  UserId attacker;
  std::vector<UserId> targets;
  /// How far the attacker can see who is around; defaults to radio range.
  std::optional<double> sight_m;
};

struct LinkabilityAttackConfig {
  UserId victim;
  std::int64_t leak_day = 0;
  std::vector<LocalPoint> sensors;
  std::optional<double> sensor_range_m;
};

struct ForgeAttackConfig {
  UserId user;
  std::vector<ForgeEdit> edits;
};

struct AttackConfig {
  enum class Kind { kRelay, kRangeExtender, kTargetedIdentification, kLinkability, kForgeStore };
  Kind kind = Kind::kRelay;
  RelayAttackConfig relay;
  ExtenderAttackConfig extender;
  TargetedAttackConfig targeted;
  LinkabilityAttackConfig linkability;
  ForgeAttackConfig forge;
};

std::string to_string(AttackConfig::Kind k);

struct OutputConfig {
  std::string dir = "out";
  std::string event_log = "events.jsonl";
  std::string report = "report.json";
  bool log_broadcasts = false;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  WorldConfig world;
  ProtocolConfig protocol;
  std::vector<AttackConfig> attacks;
  ThresholdsConfig thresholds;
  OutputConfig output;
};

/// Parses and validates. Errors are ConfigError with a message of the form
/// "<source>:<line>: <json path>: <problem>".
ScenarioConfig parse_config(const std::string& text, const std::string& source = "<config>");
ScenarioConfig load_config(const std::string& path);

/// Semantic checks across sections. Throws ConfigError.
void validate(const ScenarioConfig& config);

/// Every field, defaults included.
nlohmann::json to_json(const ScenarioConfig& config);
std::string config_hash(const ScenarioConfig& config);

GeoPoint to_geo(const Bounds& bounds, const LocalPoint& p);

}  // namespace tracebench
