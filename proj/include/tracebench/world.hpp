#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tracebench/core.hpp"
#include "tracebench/crypto.hpp"
#include "tracebench/random.hpp"

namespace tracebench {

// ---------------------------------------------------------------------------
// Mobility

/// Rectangular area measured in meters east/north of its south-west corner.
struct Bounds {
  GeoPoint origin{1.3521, 103.8198};
  double width_m = 2000.0;
  double height_m = 2000.0;
};

enum class MobilityModel { kStationary, kRandomWaypoint, kCommute, kScripted };

std::string to_string(MobilityModel m);
MobilityModel mobility_model_from_string(const std::string& s);

/// Scripted waypoint in local meters; positions between waypoints are
/// linearly interpolated and held constant outside the script.
struct Waypoint {
  Seconds time_s = 0;
  double east_m = 0.0;
  double north_m = 0.0;
};

struct MobilityConfig {
  MobilityModel model = MobilityModel::kCommute;
  Bounds bounds;
  double max_speed_mps = 1.5;
  // random waypoint
  Seconds pause_min_s = 0;
  Seconds pause_max_s = 1800;
  // commute
  std::size_t household_size = 1;
  std::size_t office_size = 4;
  double desk_spacing_m = 1.5;
  Seconds work_start_s = 9 * 3600;
  Seconds work_end_s = 17 * 3600;
  Seconds schedule_jitter_s = 1800;
  // scripted
  std::map<UserId, std::vector<Waypoint>> scripts;
};

/// Deterministic under `seed`. Throws ConfigError for degenerate bounds,
/// n_users == 0, a tick that does not divide the horizon, or a generated or
/// scripted path that exceeds max_speed_mps.
TrajectoryMap generate_trajectories(std::uint64_t seed, std::size_t n_users, Seconds horizon_s, Seconds tick_s,
                                    const MobilityConfig& mobility);

// ---------------------------------------------------------------------------
// Radio

struct RadioModel {
  double p0_dbm = -55.0;
  double path_loss_exponent = 2.0;
  double noise_sigma_db = 4.0;
  double max_range_m = 10.0;
  SignalBand band;
};

void validate(const RadioModel& model);

inline constexpr double kColocatedDistanceM = 0.1;

double noiseless_rssi(const RadioModel& model, double distance_m);
/// Inverts the noiseless path-loss curve.
double distance_from_rssi(const RadioModel& model, double rssi_dbm);

/// Log-distance path loss with gaussian shadowing, clamped into the signal
/// band. std::nullopt when distance_m > max_range_m.
std::optional<SignalStrength> radio_observe(const RadioModel& model, double distance_m, RandomStream& rand);

/// Where an observation came from. Everything but kGenuine is adversarial;
/// kForged marks records an attacker wrote directly into a store.
enum class Origin { kGenuine, kRelay, kExtender, kForged };

std::string to_string(Origin o);
Origin origin_from_string(const std::string& s);

struct Hearing {
  UserId user;
  SignalStrength rssi;
};

struct BroadcastEvent {
  UserId sender;
  Bytes payload;
  Seconds time_s = 0;
  std::vector<Hearing> heard_by;
  Origin origin = Origin::kGenuine;
};

/// Positions of every user at one tick.
std::map<UserId, GeoPoint> positions_at(const TrajectoryMap& trajectories, std::size_t tick);

/// One event per sender with a payload; heard_by holds every other user
/// within max_range_m of the sender at this tick, each with its own radio
/// sample. Events are ordered by sender and hearers by user id.
std::vector<BroadcastEvent> tick_broadcasts(const TrajectoryMap& trajectories, std::size_t tick,
                                            const std::map<UserId, Bytes>& payloads, const RadioModel& model,
                                            RandomStream& rand);

/// Fixed infrastructure (WiFi access points) with a stable identifier.
struct Beacon {
  std::string id;
  GeoPoint location;
};

struct BeaconHearing {
  UserId user;
  std::size_t beacon = 0;
  SignalStrength rssi;
};

std::vector<BeaconHearing> tick_beacons(const TrajectoryMap& trajectories, std::size_t tick,
                                        const std::vector<Beacon>& beacons, const RadioModel& model,
                                        RandomStream& rand);

// ---------------------------------------------------------------------------
// Walls: block transmission in ground truth but not radio hearing.

struct Wall {
  GeoPoint a;
  GeoPoint b;
};

bool separated_by_wall(const GeoPoint& p, const GeoPoint& q, const std::vector<Wall>& walls);

/// True when a wall separates the pair on every tick of the encounter.
bool encounter_walled(const GroundTruthEncounter& e, const TrajectoryMap& trajectories,
                      const std::vector<Wall>& walls);

// ---------------------------------------------------------------------------
// Epidemic

struct FomiteDeposit {
  GeoPoint location;
  Seconds deposited_at = 0;
  UserId source;
  Seconds viability_halflife_s = 6 * 3600;
};

/// Remaining infectivity in (0, 1] after exponential decay.
double fomite_viability(const FomiteDeposit& d, Seconds now);

struct FomiteConfig {
  double exposure_radius_m = 1.5;
  Seconds halflife_s = 6 * 3600;
  double cutoff = 0.05;
};

struct ScriptedCase {
  UserId user;
  Seconds infected_at_s = 0;
  std::optional<Seconds> report_at_s;
};

struct EpidemicConfig {
  double p_direct_per_contact_interval = 0.1;
  double p_indirect_per_exposure = 0.0;
  Seconds infectious_delay_s = 2 * kSecondsPerDay;
  Seconds report_delay_s = 5 * kSecondsPerDay;
  double report_fraction = 1.0;
  Seconds contact_interval_s = 900;
  std::vector<UserId> seed_infected;
  std::vector<ScriptedCase> scripted;
  FomiteConfig fomite;
};

void validate(const EpidemicConfig& config);

struct InfectionRecord {
  UserId user;
  Seconds infected_at_s = 0;
  Seconds infectious_at_s = 0;
  std::optional<Seconds> report_at_s;
  TransmissionMode mode = TransmissionMode::kSeed;
  std::optional<UserId> source;
};

struct EpidemicTimeline {
  std::vector<TransmissionEvent> transmissions;  // chronological
  std::map<UserId, InfectionRecord> infections;
};

/// Direct transmission is sampled once per (encounter, contact interval)
/// while the source is infectious; walled encounters never transmit.
/// Indirect transmission is sampled per tick an agent spends within the
/// exposure radius of a viable deposit, with probability p_indirect scaled
/// by the deposit's viability.
EpidemicTimeline run_epidemic(std::uint64_t seed, const TrajectoryMap& trajectories, const EpidemicConfig& config,
                              const std::vector<GroundTruthEncounter>& encounters,
                              const std::vector<Wall>& walls = {});

}  // namespace tracebench
