#include "tracebench/simulation.hpp"

#include <algorithm>
#include <deque>

#include "sim_internal.hpp"
#include "tracebench/log.hpp"

namespace tracebench {

using nlohmann::json;

namespace sim {

Bytes u64_le(std::uint64_t v) {
  Bytes out(8);
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
  return out;
}

std::uint64_t Context::alert(UserId reporter, UserId contact, double score, Origin origin) {
  return log.append({{"type", "alert"},
                     {"protocol", protocol_name()},
                     {"reporter", reporter.index},
                     {"contact", contact.index},
                     {"score", score},
                     {"origin", to_string(origin)}});
}

void Context::forgery(UserId user, const std::vector<ForgeEdit>& edits, const ForgeOutcome& outcome,
                      std::size_t accepted, std::size_t rejected) {
  json actions = json::array();
  for (const ForgeEdit& e : edits) actions.push_back(to_string(e.kind));
  log.append({{"type", "forgery"},
              {"protocol", protocol_name()},
              {"user", user.index},
              {"actions", actions},
              {"deleted", outcome.deleted},
              {"injected", outcome.injected},
              {"accepted", accepted},
              {"rejected", rejected}});
}

std::optional<Bytes> Context::replay_payload(UserId peer, Seconds t) const {
  auto it = captured.find({peer, t - t % tick_s});
  if (it == captured.end()) return std::nullopt;
  return it->second;
}

}  // namespace sim

namespace {

struct PendingReport {
  UserId user;
  Seconds window_start_s = 0;
};

json encounter_json(const GroundTruthEncounter& e, bool walled) {
  return {{"type", "encounter"},
          {"a", e.a.index},
          {"b", e.b.index},
          {"start_s", e.interval.start_s},
          {"end_s", e.interval.end_s},
          {"min_distance_m", e.min_distance_m},
          {"walled", walled}};
}

json optional_user(const std::optional<UserId>& u) { return u ? json(u->index) : json(nullptr); }

json optional_seconds(const std::optional<Seconds>& s) { return s ? json(*s) : json(nullptr); }

struct InjectionTally {
  std::string attack;
  std::uint64_t events = 0;
  std::uint64_t hearings = 0;
};

void tally(InjectionTally& t, const std::vector<BroadcastEvent>& events) {
  t.events += events.size();
  for (const auto& ev : events) t.hearings += ev.heard_by.size();
}

}  // namespace

void run_simulation(const ScenarioConfig& config, std::ostream& event_log, std::ostream* publications) {
  validate(config);
  const WorldConfig& world = config.world;
  const Bounds& bounds = world.mobility.bounds;

  EventLogWriter log(event_log, to_json(config), config_hash(config));

  log_debug("generating trajectories");
  const TrajectoryMap trajectories =
      generate_trajectories(config.seed, world.n_users, world.horizon_s, world.tick_s, world.mobility);
  const std::size_t ticks = static_cast<std::size_t>(world.horizon_s / world.tick_s);

  std::vector<Wall> walls;
  for (const WallConfig& w : world.walls) walls.push_back({to_geo(bounds, w.a), to_geo(bounds, w.b)});

  const auto encounters =
      close_contact_oracle(trajectories, config.thresholds.close_distance_m, config.thresholds.min_duration_s);
  log.append({{"type", "world"},
              {"n_users", world.n_users},
              {"ticks", ticks},
              {"tick_s", world.tick_s},
              {"horizon_s", world.horizon_s},
              {"encounters", encounters.size()}});
  for (const auto& e : encounters) log.append(encounter_json(e, encounter_walled(e, trajectories, walls)));

  log_debug("running epidemic over " + std::to_string(encounters.size()) + " encounters");
  const EpidemicTimeline timeline = run_epidemic(config.seed, trajectories, world.epidemic, encounters, walls);
  for (const auto& [u, rec] : timeline.infections) {
    log.append({{"type", "infection"},
                {"user", u.index},
                {"infected_at_s", rec.infected_at_s},
                {"infectious_at_s", rec.infectious_at_s},
                {"report_at_s", optional_seconds(rec.report_at_s)},
                {"mode", to_string(rec.mode)},
                {"source", optional_user(rec.source)}});
  }
  for (const auto& tr : timeline.transmissions) {
    log.append({{"type", "transmission"},
                {"source", tr.source.index},
                {"target", tr.target.index},
                {"time_s", tr.time_s},
                {"mode", to_string(tr.mode)}});
  }

  // Reports fire at the first tick at or after their time; those landing on
  // the horizon run after the loop.
  std::map<Seconds, std::vector<PendingReport>> due;
  for (const auto& [u, rec] : timeline.infections) {
    if (!rec.report_at_s || *rec.report_at_s > world.horizon_s) continue;
    const Seconds r = *rec.report_at_s;
    const Seconds at = std::min(world.horizon_s, (r + world.tick_s - 1) / world.tick_s * world.tick_s);
    const Seconds w = std::min(at, rec.infectious_at_s / kSecondsPerDay * kSecondsPerDay);
    due[at].push_back({u, w});
  }

  sim::Context ctx{.config = config,
                   .trajectories = trajectories,
                   .log = log,
                   .publications = publications,
                   .policy = policy_for_distance(world.radio, config.thresholds.close_distance_m,
                                                 config.thresholds.min_duration_s),
                   .seed = config.seed,
                   .n_users = world.n_users,
                   .tick_s = world.tick_s,
                   .horizon_s = world.horizon_s,
                   .forge_edits = {},
                   .captured = {},
                   .transcript = {}};

  std::unique_ptr<sim::Driver> driver;
  switch (config.protocol.kind) {
    case ProtocolKind::kTraceTogether:
      driver = sim::make_tracetogether_driver(ctx);
      break;
    case ProtocolKind::kDP3T:
      driver = sim::make_dp3t_driver(ctx);
      break;
    case ProtocolKind::kAltuwaiyan:
      driver = sim::make_altuwaiyan_driver(ctx);
      break;
    case ProtocolKind::kReichert:
      driver = sim::make_reichert_driver(ctx);
      break;
  }

  // Attacks.
  std::vector<std::pair<RelayState, TimeWindow>> relays;
  std::vector<std::pair<RangeExtender, TimeWindow>> extenders;
  std::vector<InjectionTally> relay_tally, extender_tally;
  struct Targeted {
    TargetedAttackConfig cfg;
    AttackerState state;
  };
  std::vector<Targeted> targeted;
  struct Linkability {
    LinkabilityAttackConfig cfg;
    AttackerState state;
    std::optional<DailyKey> leaked;
    std::optional<std::uint64_t> leak_epoch;
    std::optional<std::int64_t> rotation_day;
  };
  std::vector<Linkability> linkability;
  std::set<std::pair<UserId, Seconds>> replay_wanted;
  for (const AttackConfig& a : config.attacks) {
    switch (a.kind) {
      case AttackConfig::Kind::kRelay:
        relays.emplace_back(RelayState(RelayLink{to_geo(bounds, a.relay.endpoint_a), to_geo(bounds, a.relay.endpoint_b),
                                                 a.relay.range_m, a.relay.latency_ticks}),
                            a.relay.active);
        relay_tally.push_back({"relay"});
        break;
      case AttackConfig::Kind::kRangeExtender:
        extenders.emplace_back(RangeExtender{to_geo(bounds, a.extender.center), a.extender.radius_m, a.extender.rssi_dbm},
                               a.extender.active);
        extender_tally.push_back({"range_extender"});
        break;
      case AttackConfig::Kind::kTargetedIdentification:
        targeted.push_back({a.targeted, AttackerState{{a.targeted.attacker}, {}, {}, {}}});
        break;
      case AttackConfig::Kind::kLinkability: {
        Linkability l{a.linkability, {}, std::nullopt, std::nullopt, std::nullopt};
        for (const LocalPoint& p : a.linkability.sensors) l.state.sensors.push_back(to_geo(bounds, p));
        linkability.push_back(std::move(l));
        break;
      }
      case AttackConfig::Kind::kForgeStore:
        for (const ForgeEdit& e : a.forge.edits) {
          ctx.forge_edits[a.forge.user].push_back(e);
          if (e.kind == ForgeEdit::Kind::kInjectReplay) {
            for (std::size_t i = 0; i < e.count; ++i) {
              const Seconds t = e.at_s - e.at_s % world.tick_s + static_cast<Seconds>(i) * world.tick_s;
              if (t < world.horizon_s) replay_wanted.insert({e.peer, t});
            }
          }
        }
        break;
    }
  }
  const bool need_positions = !relays.empty() || !extenders.empty() || !targeted.empty() || !linkability.empty();

  driver->setup();
  log.append({{"type", "setup"},
              {"protocol", ctx.protocol_name()},
              {"n_users", world.n_users},
              {"close_rssi_dbm", ctx.policy.close_rssi_dbm},
              {"min_duration_s", ctx.policy.min_duration_s},
              {"coverage_interval_s", driver->coverage_interval_s()}});

  RandomStream radio_rand(config.seed, "radio");
  RandomStream relay_rand(config.seed, "relay");

  // Genuine hearings keyed by the authority's interval, flushed as the
  // interval advances.
  const Seconds coverage_s = driver->coverage_interval_s();
  std::int64_t contact_interval = -1;
  std::set<std::pair<std::uint32_t, std::uint32_t>> contact_pairs;
  auto flush_contacts = [&] {
    for (const auto& [a, b] : contact_pairs) {
      log.append({{"type", "radio_contact"}, {"a", a}, {"b", b}, {"interval", contact_interval}});
    }
    contact_pairs.clear();
  };

  auto run_reports = [&](Seconds t) {
    auto it = due.find(t);
    if (it == due.end()) return;
    for (const PendingReport& p : it->second) {
      const std::uint64_t id = log.append(
          {{"type", "report"}, {"user", p.user.index}, {"time_s", t}, {"window_start_s", p.window_start_s}});
      driver->report(p.user, t, p.window_start_s, id);
    }
  };

  std::int64_t day = -1;
  log_info("simulating " + std::to_string(ticks) + " ticks of " + ctx.protocol_name());
  for (std::size_t tick = 0; tick < ticks; ++tick) {
    const Seconds t = static_cast<Seconds>(tick) * world.tick_s;
    if (t / kSecondsPerDay != day) {
      day = t / kSecondsPerDay;
      driver->start_day(day);
      for (Linkability& l : linkability) {
        if (day == l.cfg.leak_day) {
          l.leaked = driver->current_key(l.cfg.victim);
          l.leak_epoch = driver->key_epoch(l.cfg.victim);
          log.append({{"type", "key_leak"}, {"user", l.cfg.victim.index}, {"day", day}, {"applicable", l.leaked.has_value()}});
        }
        if (l.leak_epoch && !l.rotation_day && driver->key_epoch(l.cfg.victim) != l.leak_epoch) l.rotation_day = day;
      }
    }
    run_reports(t);

    std::map<UserId, Bytes> payloads = driver->payloads(tick, t);
    for (const auto& key : replay_wanted) {
      if (key.second != t) continue;
      auto it = payloads.find(key.first);
      if (it != payloads.end()) ctx.captured[key] = it->second;
    }
    std::vector<BroadcastEvent> events = tick_broadcasts(trajectories, tick, payloads, world.radio, radio_rand);

    const std::int64_t ci = t / coverage_s;
    if (ci != contact_interval) {
      flush_contacts();
      contact_interval = ci;
    }
    for (const auto& ev : events) {
      for (const Hearing& h : ev.heard_by) {
        contact_pairs.insert({std::min(ev.sender.index, h.user.index), std::max(ev.sender.index, h.user.index)});
      }
    }

    if (need_positions) {
      const auto positions = positions_at(trajectories, tick);
      const std::vector<BroadcastEvent> genuine(events.begin(), events.end());
      for (std::size_t i = 0; i < relays.size(); ++i) {
        auto& [relay, window] = relays[i];
        std::vector<BroadcastEvent> none;
        auto out = relay.step(window.contains(t) ? genuine : none, positions, t, world.radio, relay_rand);
        tally(relay_tally[i], out);
        events.insert(events.end(), out.begin(), out.end());
      }
      for (std::size_t i = 0; i < extenders.size(); ++i) {
        if (!extenders[i].second.contains(t)) continue;
        auto out = atk_range_extender(extenders[i].first, genuine, positions);
        tally(extender_tally[i], out);
        events.insert(events.end(), out.begin(), out.end());
      }
      for (Targeted& tg : targeted) {
        atk_record_node(tg.state, tg.cfg.attacker, events, positions, tg.cfg.sight_m.value_or(world.radio.max_range_m));
      }
      for (Linkability& l : linkability) {
        atk_record_sensors(l.state, genuine, positions, l.cfg.sensor_range_m.value_or(world.radio.max_range_m),
                           world.radio);
      }
    }

    if (config.output.log_broadcasts) {
      for (const auto& ev : events) {
        json heard = json::array();
        for (const Hearing& h : ev.heard_by) heard.push_back({h.user.index, h.rssi.rssi_dbm});
        log.append({{"type", "broadcast"},
                    {"time_s", t},
                    {"sender", ev.sender.index},
                    {"payload", to_hex(ev.payload)},
                    {"origin", to_string(ev.origin)},
                    {"heard_by", heard}});
      }
    }

    driver->sense(tick, t, events);
  }
  flush_contacts();
  run_reports(world.horizon_s);

  const std::uint64_t tracing_id = log.append({{"type", "tracing"}, {"time_s", world.horizon_s}});
  driver->finish(tracing_id);

  for (const auto& tl : {relay_tally, extender_tally}) {
    for (const InjectionTally& t : tl) {
      log.append({{"type", "injection"}, {"attack", t.attack}, {"events", t.events}, {"hearings", t.hearings}});
    }
  }

  for (const Targeted& tg : targeted) {
    auto found = driver->identify_targets(tg.state, tg.cfg.targets, tg.cfg.attacker);
    json targets = json::array();
    for (UserId u : tg.cfg.targets) targets.push_back(u.index);
    json identified = json::array();
    if (found) {
      for (UserId u : *found) identified.push_back(u.index);
    }
    const std::uint64_t id = log.append({{"type", "finding"},
                                         {"attack", "targeted_identification"},
                                         {"applicable", found.has_value()},
                                         {"attacker", tg.cfg.attacker.index},
                                         {"targets", targets},
                                         {"sightings", tg.state.recorded.size()},
                                         {"identified", identified}});
    if (found) {
      for (UserId u : *found) {
        log.append({{"type", "fact"},
                    {"party", "attacker"},
                    {"kind", to_string(FactKind::kIdentityLink)},
                    {"subject", "infected:" + identity_subject(u.index)},
                    {"source", id}});
      }
    }
  }

  for (const Linkability& l : linkability) {
    std::map<std::size_t, std::int64_t> linked;
    if (l.leaked) {
      const std::int64_t last_day = (world.horizon_s - 1) / kSecondsPerDay;
      for (const LinkedSighting& s : atk_linkability(l.state, *l.leaked, last_day, driver->ids_per_day())) {
        linked[s.sighting] = s.day;
      }
    }
    json sightings = json::array();
    for (std::size_t i = 0; i < l.state.recorded.size(); ++i) {
      const Sighting& s = l.state.recorded[i];
      auto it = linked.find(i);
      sightings.push_back({s.time_s, s.sender.index, it == linked.end() ? json(nullptr) : json(it->second)});
    }
    const std::uint64_t id = log.append({{"type", "finding"},
                                         {"attack", "linkability"},
                                         {"applicable", l.leaked.has_value()},
                                         {"victim", l.cfg.victim.index},
                                         {"leak_day", l.cfg.leak_day},
                                         {"rotation_day", l.rotation_day ? json(*l.rotation_day) : json(nullptr)},
                                         {"linked", linked.size()},
                                         {"sightings", sightings}});
    for (const auto& [i, d] : linked) {
      const Sighting& s = l.state.recorded[i];
      log.append({{"type", "fact"},
                  {"party", "attacker"},
                  {"kind", to_string(FactKind::kLocationPoint)},
                  {"subject", location_subject("trail:" + identity_subject(l.cfg.victim.index), s.time_s)},
                  {"source", id}});
    }
  }

  for (const PartyView* view : driver->views()) {
    for (const Fact& f : view->facts()) {
      log.append({{"type", "fact"},
                  {"party", view->party()},
                  {"kind", to_string(f.kind)},
                  {"subject", f.subject},
                  {"source", f.event_id}});
    }
  }

  for (const auto& [key, entry] : ctx.transcript.entries()) {
    log.append({{"type", "message"},
                {"protocol", ctx.protocol_name()},
                {"from", std::get<0>(key)},
                {"to", std::get<1>(key)},
                {"kind", std::get<2>(key)},
                {"count", entry.count},
                {"bytes", entry.bytes}});
  }
  log.close();
}

}  // namespace tracebench
