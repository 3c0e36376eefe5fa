#include "tracebench/world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <tuple>
#include <unordered_map>

namespace tracebench {

std::string to_string(MobilityModel m) {
  switch (m) {
    case MobilityModel::kStationary:
      return "stationary";
    case MobilityModel::kRandomWaypoint:
      return "random-waypoint";
    case MobilityModel::kCommute:
      return "commute";
    case MobilityModel::kScripted:
      return "scripted";
  }
  return "unknown";
}

MobilityModel mobility_model_from_string(const std::string& s) {
  if (s == "stationary") return MobilityModel::kStationary;
  if (s == "random-waypoint") return MobilityModel::kRandomWaypoint;
  if (s == "commute") return MobilityModel::kCommute;
  if (s == "scripted") return MobilityModel::kScripted;
  throw ConfigError("unknown mobility model '" + s + "'");
}

namespace {

struct Local {
  double x = 0.0;
  double y = 0.0;
};

using Path = std::vector<Waypoint>;

Local interpolate(const Path& path, Seconds t) {
  if (path.empty()) return {};
  if (t <= path.front().time_s) return {path.front().east_m, path.front().north_m};
  if (t >= path.back().time_s) return {path.back().east_m, path.back().north_m};
  auto it = std::upper_bound(path.begin(), path.end(), t, [](Seconds v, const Waypoint& w) { return v < w.time_s; });
  const Waypoint& b = *it;
  const Waypoint& a = *std::prev(it);
  if (b.time_s == a.time_s) return {b.east_m, b.north_m};
  const double f = static_cast<double>(t - a.time_s) / static_cast<double>(b.time_s - a.time_s);
  return {a.east_m + f * (b.east_m - a.east_m), a.north_m + f * (b.north_m - a.north_m)};
}

Local random_point(RandomStream& rng, const Bounds& b, double margin) {
  const double m = std::min(margin, 0.25 * std::min(b.width_m, b.height_m));
  return {rng.uniform(m, b.width_m - m), rng.uniform(m, b.height_m - m)};
}

Seconds travel_time(Local a, Local b, double speed) {
  const double d = std::hypot(b.x - a.x, b.y - a.y);
  return static_cast<Seconds>(std::ceil(d / speed));
}

Path random_waypoint_path(RandomStream& rng, const MobilityConfig& cfg, Seconds horizon_s) {
  Path path;
  Local here = random_point(rng, cfg.bounds, 0.0);
  Seconds t = 0;
  path.push_back({t, here.x, here.y});
  while (t < horizon_s) {
    const Local dest = random_point(rng, cfg.bounds, 0.0);
    const double speed = rng.uniform(0.3, 0.9) * cfg.max_speed_mps;
    t += std::max<Seconds>(1, travel_time(here, dest, speed));
    path.push_back({t, dest.x, dest.y});
    here = dest;
    const Seconds span = std::max<Seconds>(0, cfg.pause_max_s - cfg.pause_min_s);
    t += cfg.pause_min_s + static_cast<Seconds>(rng.uniform_below(static_cast<std::uint64_t>(span) + 1));
    path.push_back({t, here.x, here.y});
  }
  return path;
}

std::vector<Path> commute_paths(RandomStream& rng, const MobilityConfig& cfg, std::size_t n_users,
                                Seconds horizon_s) {
  const std::size_t hh = std::max<std::size_t>(1, cfg.household_size);
  const std::size_t office = std::max<std::size_t>(1, cfg.office_size);
  std::vector<Local> home(n_users), desk(n_users);
  for (std::size_t first = 0; first < n_users; first += hh) {
    const Local base = random_point(rng, cfg.bounds, 20.0);
    for (std::size_t k = 0; k < hh && first + k < n_users; ++k) home[first + k] = {base.x + static_cast<double>(k), base.y};
  }
  const auto order = rng.permutation(n_users);
  for (std::size_t first = 0; first < n_users; first += office) {
    const Local base = random_point(rng, cfg.bounds, 20.0);
    for (std::size_t k = 0; k < office && first + k < n_users; ++k) {
      desk[order[first + k]] = {base.x + static_cast<double>(k) * cfg.desk_spacing_m, base.y};
    }
  }
  const double speed = 0.9 * cfg.max_speed_mps;
  const Seconds jitter = std::max<Seconds>(0, cfg.schedule_jitter_s);
  std::vector<Path> paths(n_users);
  const Seconds days = (horizon_s + kSecondsPerDay - 1) / kSecondsPerDay;
  for (std::size_t u = 0; u < n_users; ++u) {
    Path& p = paths[u];
    p.push_back({0, home[u].x, home[u].y});
    const Seconds commute = travel_time(home[u], desk[u], speed);
    for (Seconds d = 0; d < days; ++d) {
      const Seconds day0 = d * kSecondsPerDay;
      const Seconds arrive =
          day0 + cfg.work_start_s + static_cast<Seconds>(rng.uniform_below(static_cast<std::uint64_t>(jitter) + 1));
      const Seconds leave =
          day0 + cfg.work_end_s + static_cast<Seconds>(rng.uniform_below(static_cast<std::uint64_t>(jitter) + 1));
      const Seconds depart = std::max(p.back().time_s, arrive - commute);
      p.push_back({depart, home[u].x, home[u].y});
      p.push_back({depart + commute, desk[u].x, desk[u].y});
      const Seconds back = std::max(depart + commute, leave);
      p.push_back({back, desk[u].x, desk[u].y});
      p.push_back({back + commute, home[u].x, home[u].y});
    }
  }
  return paths;
}

}  // namespace

TrajectoryMap generate_trajectories(std::uint64_t seed, std::size_t n_users, Seconds horizon_s, Seconds tick_s,
                                    const MobilityConfig& mobility) {
  if (n_users == 0) throw ConfigError("n_users must be at least 1");
  if (!(mobility.bounds.width_m > 0.0) || !(mobility.bounds.height_m > 0.0) || !is_valid(mobility.bounds.origin)) {
    throw ConfigError("mobility bounds are degenerate");
  }
  if (tick_s <= 0 || horizon_s <= 0 || horizon_s % tick_s != 0) {
    throw ConfigError("tick must be positive and divide the horizon");
  }
  if (!(mobility.max_speed_mps > 0.0)) throw ConfigError("max_speed_mps must be positive");

  RandomStream rng(seed, "world/mobility/" + to_string(mobility.model));
  std::vector<Path> paths(n_users);
  switch (mobility.model) {
    case MobilityModel::kStationary:
      for (auto& p : paths) {
        const Local l = random_point(rng, mobility.bounds, 0.0);
        p.push_back({0, l.x, l.y});
      }
      break;
    case MobilityModel::kRandomWaypoint:
      for (auto& p : paths) p = random_waypoint_path(rng, mobility, horizon_s);
      break;
    case MobilityModel::kCommute:
      paths = commute_paths(rng, mobility, n_users, horizon_s);
      break;
    case MobilityModel::kScripted:
      for (const auto& [user, script] : mobility.scripts) {
        if (user.index >= n_users) throw ConfigError("script for unknown user " + std::to_string(user.index));
        for (std::size_t i = 1; i < script.size(); ++i) {
          if (script[i].time_s < script[i - 1].time_s) throw ConfigError("script waypoints must be time-ordered");
        }
        paths[user.index] = script;
      }
      for (std::size_t u = 0; u < n_users; ++u) {
        if (paths[u].empty()) throw ConfigError("scripted mobility lacks a script for user " + std::to_string(u));
      }
      break;
  }

  const std::size_t ticks = static_cast<std::size_t>(horizon_s / tick_s);
  const double max_step = mobility.max_speed_mps * static_cast<double>(tick_s) * (1.0 + 1e-9) + 1e-9;
  TrajectoryMap out;
  for (std::size_t u = 0; u < n_users; ++u) {
    const UserId id{static_cast<std::uint32_t>(u)};
    Trajectory traj{id, {}};
    traj.samples.reserve(ticks);
    Local prev{};
    for (std::size_t k = 0; k < ticks; ++k) {
      const Seconds t = static_cast<Seconds>(k) * tick_s;
      const Local l = interpolate(paths[u], t);
      if (l.x < -1e-9 || l.y < -1e-9 || l.x > mobility.bounds.width_m + 1e-9 || l.y > mobility.bounds.height_m + 1e-9) {
        throw ConfigError("user " + std::to_string(u) + " leaves the mobility bounds");
      }
      if (k > 0 && std::hypot(l.x - prev.x, l.y - prev.y) > max_step) {
        throw ConfigError("user " + std::to_string(u) + " exceeds max_speed_mps at t=" + std::to_string(t));
      }
      prev = l;
      traj.samples.push_back({t, offset_meters(mobility.bounds.origin, l.x, l.y)});
    }
    out.emplace(id, std::move(traj));
  }
  return out;
}

// ---------------------------------------------------------------------------

void validate(const RadioModel& model) {
  if (!(model.path_loss_exponent > 0.0)) throw ConfigError("radio path_loss_exponent must be positive");
  if (!(model.max_range_m > 0.0)) throw ConfigError("radio max_range_m must be positive");
  if (!(model.noise_sigma_db >= 0.0)) throw ConfigError("radio noise_sigma_db must be non-negative");
  if (!(model.band.min_dbm < model.band.max_dbm)) throw ConfigError("radio signal band is empty");
}

double noiseless_rssi(const RadioModel& model, double distance_m) {
  const double d = std::max(distance_m, kColocatedDistanceM);
  return model.p0_dbm - 10.0 * model.path_loss_exponent * std::log10(d);
}

double distance_from_rssi(const RadioModel& model, double rssi_dbm) {
  return std::pow(10.0, (model.p0_dbm - rssi_dbm) / (10.0 * model.path_loss_exponent));
}

std::optional<SignalStrength> radio_observe(const RadioModel& model, double distance_m, RandomStream& rand) {
  if (distance_m > model.max_range_m) return std::nullopt;
  double rssi = noiseless_rssi(model, distance_m);
  if (model.noise_sigma_db > 0.0) rssi += rand.normal(0.0, model.noise_sigma_db);
  return SignalStrength{std::clamp(rssi, model.band.min_dbm, model.band.max_dbm)};
}

std::string to_string(Origin o) {
  switch (o) {
    case Origin::kGenuine:
      return "genuine";
    case Origin::kRelay:
      return "relay";
    case Origin::kExtender:
      return "extender";
    case Origin::kForged:
      return "forged";
  }
  return "unknown";
}

Origin origin_from_string(const std::string& s) {
  if (s == "genuine") return Origin::kGenuine;
  if (s == "relay") return Origin::kRelay;
  if (s == "extender") return Origin::kExtender;
  if (s == "forged") return Origin::kForged;
  throw ArgumentError("unknown broadcast origin '" + s + "'");
}

std::map<UserId, GeoPoint> positions_at(const TrajectoryMap& trajectories, std::size_t tick) {
  std::map<UserId, GeoPoint> out;
  for (const auto& [u, t] : trajectories) out.emplace(u, t.samples.at(tick).point);
  return out;
}

std::vector<BroadcastEvent> tick_broadcasts(const TrajectoryMap& trajectories, std::size_t tick,
                                            const std::map<UserId, Bytes>& payloads, const RadioModel& model,
                                            RandomStream& rand) {
  std::vector<std::pair<UserId, GeoPoint>> pos;
  pos.reserve(trajectories.size());
  for (const auto& [u, t] : trajectories) pos.emplace_back(u, t.samples.at(tick).point);
  const Seconds now = trajectories.begin()->second.samples.at(tick).time_s;

  std::vector<BroadcastEvent> events;
  for (const auto& [sender, payload] : payloads) {
    const auto self = std::lower_bound(pos.begin(), pos.end(), sender,
                                       [](const auto& e, UserId id) { return e.first < id; });
    if (self == pos.end() || self->first != sender) continue;
    BroadcastEvent ev{sender, payload, now, {}, Origin::kGenuine};
    for (const auto& [u, p] : pos) {
      if (u == sender) continue;
      const double d = distance_meters(self->second, p);
      if (d > model.max_range_m) continue;
      if (auto s = radio_observe(model, d, rand)) ev.heard_by.push_back({u, *s});
    }
    events.push_back(std::move(ev));
  }
  return events;
}

std::vector<BeaconHearing> tick_beacons(const TrajectoryMap& trajectories, std::size_t tick,
                                        const std::vector<Beacon>& beacons, const RadioModel& model,
                                        RandomStream& rand) {
  std::vector<BeaconHearing> out;
  if (beacons.empty()) return out;
  for (const auto& [u, t] : trajectories) {
    const GeoPoint& p = t.samples.at(tick).point;
    for (std::size_t b = 0; b < beacons.size(); ++b) {
      if (auto s = radio_observe(model, distance_meters(p, beacons[b].location), rand)) out.push_back({u, b, *s});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

Local project(const GeoPoint& origin, const GeoPoint& p) {
  constexpr double kDeg = std::numbers::pi / 180.0;
  return {(p.lon_deg - origin.lon_deg) * kDeg * std::cos(origin.lat_deg * kDeg) * kEarthRadiusM,
          (p.lat_deg - origin.lat_deg) * kDeg * kEarthRadiusM};
}

double cross(Local o, Local a, Local b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

bool segments_intersect(Local p1, Local p2, Local q1, Local q2) {
  const double d1 = cross(q1, q2, p1), d2 = cross(q1, q2, p2);
  const double d3 = cross(p1, p2, q1), d4 = cross(p1, p2, q2);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

}  // namespace

bool separated_by_wall(const GeoPoint& p, const GeoPoint& q, const std::vector<Wall>& walls) {
  for (const auto& w : walls) {
    const GeoPoint& o = w.a;
    if (segments_intersect(project(o, p), project(o, q), project(o, w.a), project(o, w.b))) return true;
  }
  return false;
}

bool encounter_walled(const GroundTruthEncounter& e, const TrajectoryMap& trajectories,
                      const std::vector<Wall>& walls) {
  if (walls.empty()) return false;
  const auto& sa = trajectories.at(e.a).samples;
  const auto& sb = trajectories.at(e.b).samples;
  for (std::size_t k = 0; k < sa.size(); ++k) {
    if (sa[k].time_s < e.interval.start_s || sa[k].time_s >= e.interval.end_s) continue;
    if (!separated_by_wall(sa[k].point, sb[k].point, walls)) return false;
  }
  return true;
}

double fomite_viability(const FomiteDeposit& d, Seconds now) {
  const double age = static_cast<double>(std::max<Seconds>(0, now - d.deposited_at));
  return std::pow(0.5, age / static_cast<double>(d.viability_halflife_s));
}

void validate(const EpidemicConfig& c) {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(name) + " must be a probability in [0, 1]");
  };
  prob(c.p_direct_per_contact_interval, "p_direct_per_contact_interval");
  prob(c.p_indirect_per_exposure, "p_indirect_per_exposure");
  prob(c.report_fraction, "report_fraction");
  prob(c.fomite.cutoff, "fomite cutoff");
  if (c.infectious_delay_s < 0 || c.report_delay_s < 0) throw ConfigError("epidemic delays must be non-negative");
  if (c.contact_interval_s <= 0) throw ConfigError("contact_interval_s must be positive");
  if (c.fomite.halflife_s <= 0 || !(c.fomite.exposure_radius_m > 0.0)) {
    throw ConfigError("fomite half-life and exposure radius must be positive");
  }
}

namespace {

struct Opportunity {
  Seconds time_s;
  std::size_t encounter;
};

struct CellKey {
  std::int64_t x;
  std::int64_t y;
  bool operator==(const CellKey&) const = default;
};
struct CellHash {
  std::size_t operator()(const CellKey& k) const {
    return std::hash<std::int64_t>()(k.x * 73856093LL ^ k.y * 19349663LL);
  }
};

}  // namespace

EpidemicTimeline run_epidemic(std::uint64_t seed, const TrajectoryMap& trajectories, const EpidemicConfig& config,
                              const std::vector<GroundTruthEncounter>& encounters, const std::vector<Wall>& walls) {
  validate(config);
  const TickGrid grid = common_tick_grid(trajectories);
  const Seconds horizon_end = grid.start_s + static_cast<Seconds>(grid.ticks) * grid.tick_s;
  RandomStream direct_rng(seed, "world/epidemic/direct");
  RandomStream indirect_rng(seed, "world/epidemic/indirect");
  RandomStream report_rng(seed, "world/epidemic/report");

  EpidemicTimeline tl;
  std::set<UserId> scripted_users;
  for (const auto& c : config.scripted) {
    if (!trajectories.contains(c.user)) throw ConfigError("scripted case for unknown user");
    scripted_users.insert(c.user);
  }

  auto infect = [&](UserId user, Seconds t, TransmissionMode mode, std::optional<UserId> source) {
    InfectionRecord rec{user, t, t + config.infectious_delay_s, std::nullopt, mode, source};
    const Seconds report_at = t + config.report_delay_s;
    if (report_rng.bernoulli(config.report_fraction) && report_at <= horizon_end) rec.report_at_s = report_at;
    tl.infections.emplace(user, rec);
    if (source) tl.transmissions.push_back({*source, user, t, mode});
  };

  for (const auto& u : config.seed_infected) {
    if (!trajectories.contains(u)) throw ConfigError("seed infection for unknown user");
    if (!tl.infections.contains(u) && !scripted_users.contains(u)) infect(u, grid.start_s, TransmissionMode::kSeed, {});
  }
  std::vector<ScriptedCase> scripted = config.scripted;
  std::stable_sort(scripted.begin(), scripted.end(),
                   [](const ScriptedCase& a, const ScriptedCase& b) { return a.infected_at_s < b.infected_at_s; });
  std::size_t next_scripted = 0;

  auto infectious_at = [&](UserId u, Seconds t) {
    auto it = tl.infections.find(u);
    return it != tl.infections.end() && it->second.infectious_at_s <= t;
  };
  auto susceptible = [&](UserId u) { return !tl.infections.contains(u) && !scripted_users.contains(u); };

  // Direct-transmission opportunities: first tick of each (encounter, contact slot) overlap.
  std::vector<Opportunity> opps;
  std::map<std::pair<UserId, UserId>, std::vector<std::pair<Seconds, Seconds>>> active;
  for (std::size_t i = 0; i < encounters.size(); ++i) {
    const auto& e = encounters[i];
    active[{e.a, e.b}].emplace_back(e.interval.start_s, e.interval.end_s);
    if (encounter_walled(e, trajectories, walls)) continue;
    Seconds t = e.interval.start_s;
    while (t < e.interval.end_s) {
      opps.push_back({t, i});
      const Seconds slot_end = (t / config.contact_interval_s + 1) * config.contact_interval_s;
      t = slot_end;
    }
  }
  std::stable_sort(opps.begin(), opps.end(), [](const Opportunity& a, const Opportunity& b) {
    return std::tie(a.time_s, a.encounter) < std::tie(b.time_s, b.encounter);
  });
  std::size_t next_opp = 0;

  auto in_direct_contact = [&](UserId a, UserId b, Seconds t) {
    auto it = active.find({std::min(a, b), std::max(a, b)});
    if (it == active.end()) return false;
    for (const auto& [s, e] : it->second) {
      if (t >= s && t < e) return true;
    }
    return false;
  };

  // Fomite state.
  const bool fomites = config.p_indirect_per_exposure > 0.0;
  const GeoPoint origin = trajectories.begin()->second.samples.front().point;
  const double cell = config.fomite.exposure_radius_m;
  std::vector<FomiteDeposit> deposits;
  std::map<std::tuple<UserId, std::int64_t, std::int64_t>, std::size_t> deposit_slot;
  std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> index;
  auto cell_of = [&](const GeoPoint& p) {
    const Local l = project(origin, p);
    return CellKey{static_cast<std::int64_t>(std::floor(l.x / cell)), static_cast<std::int64_t>(std::floor(l.y / cell))};
  };

  std::vector<std::pair<UserId, const Trajectory*>> users;
  for (const auto& [u, t] : trajectories) users.emplace_back(u, &t);

  for (std::size_t k = 0; k < grid.ticks; ++k) {
    const Seconds t = grid.start_s + static_cast<Seconds>(k) * grid.tick_s;
    while (next_scripted < scripted.size() && scripted[next_scripted].infected_at_s <= t) {
      const auto& c = scripted[next_scripted++];
      InfectionRecord rec{c.user, c.infected_at_s, c.infected_at_s + config.infectious_delay_s, c.report_at_s,
                          TransmissionMode::kSeed, std::nullopt};
      tl.infections.emplace(c.user, rec);
    }

    for (; next_opp < opps.size() && opps[next_opp].time_s <= t; ++next_opp) {
      const auto& e = encounters[opps[next_opp].encounter];
      const Seconds when = opps[next_opp].time_s;
      UserId src, dst;
      if (infectious_at(e.a, when) && susceptible(e.b)) {
        src = e.a;
        dst = e.b;
      } else if (infectious_at(e.b, when) && susceptible(e.a)) {
        src = e.b;
        dst = e.a;
      } else {
        continue;
      }
      if (direct_rng.bernoulli(config.p_direct_per_contact_interval)) infect(dst, when, TransmissionMode::kDirect, src);
    }

    if (!fomites) continue;
    for (const auto& [u, traj] : users) {
      if (!infectious_at(u, t)) continue;
      const GeoPoint& p = traj->samples[k].point;
      const Local l = project(origin, p);
      const auto key = std::make_tuple(u, static_cast<std::int64_t>(std::floor(l.x / 0.5)),
                                       static_cast<std::int64_t>(std::floor(l.y / 0.5)));
      auto it = deposit_slot.find(key);
      if (it != deposit_slot.end()) {
        deposits[it->second].deposited_at = t;
      } else {
        deposit_slot.emplace(key, deposits.size());
        index[cell_of(p)].push_back(deposits.size());
        deposits.push_back({p, t, u, config.fomite.halflife_s});
      }
    }
    for (const auto& [u, traj] : users) {
      if (!susceptible(u)) continue;
      const GeoPoint& p = traj->samples[k].point;
      const CellKey c = cell_of(p);
      bool infected = false;
      for (std::int64_t dx = -1; dx <= 1 && !infected; ++dx) {
        for (std::int64_t dy = -1; dy <= 1 && !infected; ++dy) {
          auto it = index.find({c.x + dx, c.y + dy});
          if (it == index.end()) continue;
          for (std::size_t di : it->second) {
            const FomiteDeposit& d = deposits[di];
            if (d.source == u) continue;
            const double v = fomite_viability(d, t);
            if (v < config.fomite.cutoff) continue;
            if (distance_meters(p, d.location) > config.fomite.exposure_radius_m) continue;
            if (in_direct_contact(u, d.source, t)) continue;
            if (indirect_rng.bernoulli(config.p_indirect_per_exposure * v)) {
              infect(u, t, TransmissionMode::kIndirect, d.source);
              infected = true;
              break;
            }
          }
        }
      }
    }
  }
  return tl;
}

}  // namespace tracebench
