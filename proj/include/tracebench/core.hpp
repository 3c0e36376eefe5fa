#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace tracebench {

// Error kinds shared by every module.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RangeError : std::out_of_range {
  using std::out_of_range::out_of_range;
};
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Seconds = std::int64_t;

inline constexpr Seconds kSecondsPerDay = 86400;
inline constexpr double kEarthRadiusM = 6371000.0;

struct UserId {
  std::uint32_t index = 0;
  auto operator<=>(const UserId&) const = default;
};

/// Half-open [start_s, end_s) slice of the scenario horizon.
struct TimeInterval {
  std::int64_t index = 0;
  Seconds start_s = 0;
  Seconds end_s = 0;

  bool contains(Seconds t) const { return t >= start_s && t < end_s; }
  Seconds length() const { return end_s - start_s; }
  auto operator<=>(const TimeInterval&) const = default;
};

using Schedule = std::vector<TimeInterval>;

/// Partitions [0, horizon_s) into consecutive intervals of `interval_s`.
/// The last interval is truncated if horizon_s is not a multiple.
Schedule make_schedule(Seconds horizon_s, Seconds interval_s);

/// The unique interval of `schedule` containing `time_s`. Throws RangeError
/// outside the schedule span.
const TimeInterval& interval_of(Seconds time_s, const Schedule& schedule);

struct GeoPoint {
  double lat_deg = 0.0;
  double lon_deg = 0.0;
  bool operator==(const GeoPoint&) const = default;
};

bool is_valid(const GeoPoint& p);

// Equirectangular approximation; accurate at encounter scales.
double distance_meters(const GeoPoint& p, const GeoPoint& q);
double haversine_meters(const GeoPoint& p, const GeoPoint& q);

// Local tangent-plane helpers used to place agents in meters around an origin.
GeoPoint offset_meters(const GeoPoint& origin, double east_m, double north_m);

struct SignalStrength {
  double rssi_dbm = 0.0;
  auto operator<=>(const SignalStrength&) const = default;
};

struct SignalBand {
  double min_dbm = -110.0;
  double max_dbm = -20.0;
};

bool is_plausible(const SignalStrength& s, const SignalBand& band = {});

struct TrajectorySample {
  Seconds time_s = 0;
  GeoPoint point;
};

struct Trajectory {
  UserId user;
  std::vector<TrajectorySample> samples;
};

using TrajectoryMap = std::map<UserId, Trajectory>;

/// A maximal contiguous span during which two users stayed within the
/// distance threshold. `interval` carries the span: index is the first tick.
struct GroundTruthEncounter {
  UserId a;
  UserId b;
  TimeInterval interval;
  double min_distance_m = 0.0;
  Seconds duration_s = 0;
  bool operator==(const GroundTruthEncounter&) const = default;
};

enum class TransmissionMode { kSeed, kDirect, kIndirect };

std::string to_string(TransmissionMode mode);
TransmissionMode transmission_mode_from_string(const std::string& s);

struct TransmissionEvent {
  UserId source;
  UserId target;
  Seconds time_s = 0;
  TransmissionMode mode = TransmissionMode::kDirect;
};

/// Common tick grid of a trajectory set; throws ConfigError when trajectories
/// disagree on sample times or the grid is not uniform.
struct TickGrid {
  Seconds start_s = 0;
  Seconds tick_s = 0;
  std::size_t ticks = 0;
};
TickGrid common_tick_grid(const TrajectoryMap& trajectories);

inline constexpr double kDefaultContactDistanceM = 2.0;
inline constexpr Seconds kDefaultMinContactDurationS = 900;

/// Ground-truth close contacts: one encounter per pair and maximal run of
/// ticks with distance <= dist_threshold_m lasting at least min_duration_s.
/// A run of k ticks lasts k * tick_s seconds. Output is sorted by (a, b, start).
std::vector<GroundTruthEncounter> close_contact_oracle(const TrajectoryMap& trajectories,
                                                       double dist_threshold_m = kDefaultContactDistanceM,
                                                       Seconds min_duration_s = kDefaultMinContactDurationS);

}  // namespace tracebench
