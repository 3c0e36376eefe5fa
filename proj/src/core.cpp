#include "tracebench/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tracebench {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
}

Schedule make_schedule(Seconds horizon_s, Seconds interval_s) {
  if (horizon_s <= 0 || interval_s <= 0) {
    throw ConfigError("schedule needs a positive horizon and interval length");
  }
  Schedule schedule;
  schedule.reserve(static_cast<std::size_t>((horizon_s + interval_s - 1) / interval_s));
  std::int64_t index = 0;
  for (Seconds start = 0; start < horizon_s; start += interval_s) {
    schedule.push_back({index++, start, std::min(start + interval_s, horizon_s)});
  }
  return schedule;
}

const TimeInterval& interval_of(Seconds time_s, const Schedule& schedule) {
  if (schedule.empty() || time_s < schedule.front().start_s || time_s >= schedule.back().end_s) {
    throw RangeError("time " + std::to_string(time_s) + " s is outside the interval schedule");
  }
  auto it = std::upper_bound(schedule.begin(), schedule.end(), time_s,
                             [](Seconds t, const TimeInterval& iv) { return t < iv.start_s; });
  return *std::prev(it);
}

bool is_valid(const GeoPoint& p) {
  return std::isfinite(p.lat_deg) && std::isfinite(p.lon_deg) && p.lat_deg >= -90.0 && p.lat_deg <= 90.0 &&
         p.lon_deg >= -180.0 && p.lon_deg <= 180.0;
}

double distance_meters(const GeoPoint& p, const GeoPoint& q) {
  if (p == q) return 0.0;
  const double mean_lat = 0.5 * (p.lat_deg + q.lat_deg) * kDegToRad;
  double dlon = q.lon_deg - p.lon_deg;
  // Shortest way around the antimeridian.
  if (dlon > 180.0) dlon -= 360.0;
  if (dlon < -180.0) dlon += 360.0;
  const double x = dlon * kDegToRad * std::cos(mean_lat);
  const double y = (q.lat_deg - p.lat_deg) * kDegToRad;
  return kEarthRadiusM * std::hypot(x, y);
}

double haversine_meters(const GeoPoint& p, const GeoPoint& q) {
  const double phi1 = p.lat_deg * kDegToRad;
  const double phi2 = q.lat_deg * kDegToRad;
  const double dphi = phi2 - phi1;
  const double dlambda = (q.lon_deg - p.lon_deg) * kDegToRad;
  const double h = std::sin(dphi / 2) * std::sin(dphi / 2) +
                   std::cos(phi1) * std::cos(phi2) * std::sin(dlambda / 2) * std::sin(dlambda / 2);
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

GeoPoint offset_meters(const GeoPoint& origin, double east_m, double north_m) {
  const double lat = origin.lat_deg + (north_m / kEarthRadiusM) / kDegToRad;
  const double mean_lat = 0.5 * (origin.lat_deg + lat) * kDegToRad;
  const double lon = origin.lon_deg + (east_m / (kEarthRadiusM * std::cos(mean_lat))) / kDegToRad;
  return {lat, lon};
}

bool is_plausible(const SignalStrength& s, const SignalBand& band) {
  return std::isfinite(s.rssi_dbm) && s.rssi_dbm >= band.min_dbm && s.rssi_dbm <= band.max_dbm;
}

std::string to_string(TransmissionMode mode) {
  switch (mode) {
    case TransmissionMode::kSeed:
      return "seed";
    case TransmissionMode::kDirect:
      return "direct";
    case TransmissionMode::kIndirect:
      return "indirect";
  }
  return "unknown";
}

TransmissionMode transmission_mode_from_string(const std::string& s) {
  if (s == "seed") return TransmissionMode::kSeed;
  if (s == "direct") return TransmissionMode::kDirect;
  if (s == "indirect") return TransmissionMode::kIndirect;
  throw ArgumentError("unknown transmission mode '" + s + "'");
}

TickGrid common_tick_grid(const TrajectoryMap& trajectories) {
  if (trajectories.empty()) throw ConfigError("no trajectories");
  const auto& ref = trajectories.begin()->second.samples;
  if (ref.empty()) throw ConfigError("empty trajectory");
  TickGrid grid{ref.front().time_s, 0, ref.size()};
  if (ref.size() > 1) grid.tick_s = ref[1].time_s - ref[0].time_s;
  if (ref.size() > 1 && grid.tick_s <= 0) throw ConfigError("trajectory sample times must increase");
  for (std::size_t k = 1; k < ref.size(); ++k) {
    if (ref[k].time_s - ref[k - 1].time_s != grid.tick_s) throw ConfigError("trajectory tick grid is not uniform");
  }
  for (const auto& [user, traj] : trajectories) {
    if (traj.samples.size() != ref.size()) {
      throw ConfigError("trajectory of user " + std::to_string(user.index) + " is on a different tick grid");
    }
    for (std::size_t k = 0; k < ref.size(); ++k) {
      if (traj.samples[k].time_s != ref[k].time_s) {
        throw ConfigError("trajectory of user " + std::to_string(user.index) + " is on a different tick grid");
      }
    }
  }
  return grid;
}

std::vector<GroundTruthEncounter> close_contact_oracle(const TrajectoryMap& trajectories, double dist_threshold_m,
                                                       Seconds min_duration_s) {
  const TickGrid grid = common_tick_grid(trajectories);
  // A lone sample is treated as a one-second tick so durations stay positive.
  const Seconds tick_s = grid.tick_s > 0 ? grid.tick_s : 1;

  std::vector<const Trajectory*> trajs;
  trajs.reserve(trajectories.size());
  for (const auto& [user, traj] : trajectories) trajs.push_back(&traj);

  std::vector<GroundTruthEncounter> out;
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    for (std::size_t j = i + 1; j < trajs.size(); ++j) {
      const auto& si = trajs[i]->samples;
      const auto& sj = trajs[j]->samples;
      std::size_t run_start = 0;
      std::size_t run_len = 0;
      double run_min = 0.0;
      auto flush = [&] {
        if (run_len > 0 && static_cast<Seconds>(run_len) * tick_s >= min_duration_s) {
          const Seconds start = si[run_start].time_s;
          const Seconds duration = static_cast<Seconds>(run_len) * tick_s;
          out.push_back({trajs[i]->user, trajs[j]->user,
                         TimeInterval{static_cast<std::int64_t>(run_start), start, start + duration}, run_min,
                         duration});
        }
        run_len = 0;
      };
      for (std::size_t k = 0; k < grid.ticks; ++k) {
        const double d = distance_meters(si[k].point, sj[k].point);
        if (d <= dist_threshold_m) {
          if (run_len == 0) {
            run_start = k;
            run_min = d;
          }
          run_min = std::min(run_min, d);
          ++run_len;
        } else {
          flush();
        }
      }
      flush();
    }
  }
  // std::map iteration already yields a < b and ascending start per pair.
  return out;
}

}  // namespace tracebench
