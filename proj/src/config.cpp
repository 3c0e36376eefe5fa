#include "tracebench/config.hpp"

#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "tracebench/crypto.hpp"

namespace tracebench {

using nlohmann::json;

std::string to_string(ProtocolKind p) {
  switch (p) {
    case ProtocolKind::kTraceTogether:
      return "tracetogether";
    case ProtocolKind::kDP3T:
      return "dp3t";
    case ProtocolKind::kAltuwaiyan:
      return "altuwaiyan";
    case ProtocolKind::kReichert:
      return "reichert";
  }
  return "unknown";
}

std::vector<ProtocolKind> all_protocols() {
  return {ProtocolKind::kTraceTogether, ProtocolKind::kDP3T, ProtocolKind::kAltuwaiyan, ProtocolKind::kReichert};
}

ProtocolKind protocol_from_string(const std::string& s) {
  for (ProtocolKind p : all_protocols()) {
    if (to_string(p) == s) return p;
  }
  throw ConfigError("unknown protocol '" + s + "' (expected tracetogether, dp3t, altuwaiyan or reichert)");
}

std::string to_string(AttackConfig::Kind k) {
  switch (k) {
    case AttackConfig::Kind::kRelay:
      return "relay";
    case AttackConfig::Kind::kRangeExtender:
      return "range_extender";
    case AttackConfig::Kind::kTargetedIdentification:
      return "targeted_identification";
    case AttackConfig::Kind::kLinkability:
      return "linkability";
    case AttackConfig::Kind::kForgeStore:
      return "forge_store";
  }
  return "unknown";
}

GeoPoint to_geo(const Bounds& bounds, const LocalPoint& p) { return offset_meters(bounds.origin, p.east_m, p.north_m); }

namespace {

// ---------------------------------------------------------------------------
// Source positions. Maps JSON pointers to the 1-based line where the member
// key (or array element) starts. Runs only on text nlohmann already accepted.

class LineMap {
 public:
  explicit LineMap(const std::string& text) : s_(text) {
    skip_ws();
    value("");
  }
  std::size_t line_of(std::string path) const {
    while (true) {
      auto it = lines_.find(path);
      if (it != lines_.end()) return it->second;
      const auto slash = path.rfind('/');
      if (slash == std::string::npos || path.empty()) return 1;
      path.resize(slash);
    }
  }

 private:
  void skip_ws() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) {
      if (s_[i_] == '\n') ++line_;
      ++i_;
    }
  }
  std::string string_token() {
    std::string out;
    ++i_;  // opening quote
    while (i_ < s_.size() && s_[i_] != '"') {
      if (s_[i_] == '\\') ++i_;
      out += s_[i_++];
    }
    ++i_;
    return out;
  }
  void value(const std::string& path) {
    lines_.emplace(path, line_);
    if (i_ >= s_.size()) return;
    const char c = s_[i_];
    if (c == '{') {
      ++i_;
      skip_ws();
      while (i_ < s_.size() && s_[i_] != '}') {
        const std::size_t key_line = line_;
        std::string key = string_token();
        std::string child = path + "/" + key;
        skip_ws();
        ++i_;  // ':'
        skip_ws();
        value(child);
        lines_[child] = key_line;
        skip_ws();
        if (i_ < s_.size() && s_[i_] == ',') ++i_;
        skip_ws();
      }
      ++i_;
    } else if (c == '[') {
      ++i_;
      skip_ws();
      std::size_t n = 0;
      while (i_ < s_.size() && s_[i_] != ']') {
        value(path + "/" + std::to_string(n++));
        skip_ws();
        if (i_ < s_.size() && s_[i_] == ',') ++i_;
        skip_ws();
      }
      ++i_;
    } else if (c == '"') {
      string_token();
    } else {
      while (i_ < s_.size() && !std::strchr(",]} \t\r\n", s_[i_])) ++i_;
    }
  }

  const std::string& s_;
  std::size_t i_ = 0;
  std::size_t line_ = 1;
  std::map<std::string, std::size_t> lines_;
};

using FailFn = std::function<void(const std::string& path, const std::string& msg)>;

// Typed access to one JSON object. Every consumed key is remembered so that
// finish() can reject the rest.
class Section {
 public:
  Section(const json& node, std::string path, const FailFn& fail) : node_(node), path_(std::move(path)), fail_(fail) {
    if (!node_.is_object()) fail_(path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  std::string child(const std::string& key) const { return path_ + "/" + key; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return node_.contains(key) && !node_.at(key).is_null();
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return node_.at(key);
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    out = convert<T>(node_.at(key), child(key), fail_);
  }

  template <typename T>
  void get_optional(const std::string& key, std::optional<T>& out) {
    if (!has(key)) return;
    out = convert<T>(node_.at(key), child(key), fail_);
  }

  Section sub(const std::string& key) {
    static const json kEmpty = json::object();
    if (!has(key)) return Section(kEmpty, child(key), fail_);
    return Section(node_.at(key), child(key), fail_);
  }

  void finish() const {
    for (const auto& [key, _] : node_.items()) {
      if (!seen_.contains(key)) fail_(child(key), "unknown key");
    }
  }

  template <typename T>
  static T convert(const json& v, const std::string& path, const FailFn& fail) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(path, "expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail(path, "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) fail(path, "expected a number");
      return v.get<T>();
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
        fail(path, "expected a non-negative integer");
      }
      return static_cast<T>(v.get<std::uint64_t>());
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) fail(path, "expected an integer");
      if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
        fail(path, "integer out of range");
      }
      return static_cast<T>(v.get<std::int64_t>());
    } else if constexpr (std::is_same_v<T, UserId>) {
      if (!v.is_number_unsigned() || v.get<std::uint64_t>() > UINT32_MAX) fail(path, "expected a user index");
      return UserId{static_cast<std::uint32_t>(v.get<std::uint64_t>())};
    } else if constexpr (std::is_same_v<T, LocalPoint>) {
      if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        fail(path, "expected [east_m, north_m]");
      }
      return LocalPoint{v[0].get<double>(), v[1].get<double>()};
    } else {
      static_assert(sizeof(T) == 0, "unsupported config type");
    }
  }

 private:
  const json& node_;
  std::string path_;
  const FailFn& fail_;
  std::set<std::string> seen_;
};

template <typename T>
std::vector<T> get_list(Section& s, const std::string& key, const FailFn& fail) {
  std::vector<T> out;
  if (!s.has(key)) return out;
  const json& arr = s.raw(key);
  if (!arr.is_array()) fail(s.child(key), "expected a list");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.push_back(Section::convert<T>(arr[i], s.child(key) + "/" + std::to_string(i), fail));
  }
  return out;
}

// Iterates a list of objects.
void for_each_object(Section& s, const std::string& key, const FailFn& fail,
                     const std::function<void(Section&, std::size_t)>& fn) {
  if (!s.has(key)) return;
  const json& arr = s.raw(key);
  if (!arr.is_array()) fail(s.child(key), "expected a list");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    Section item(arr[i], s.child(key) + "/" + std::to_string(i), fail);
    fn(item, i);
    item.finish();
  }
}

void read_window(Section& s, TimeWindow& w) {
  s.get("start_s", w.start_s);
  s.get_optional("end_s", w.end_s);
}

void read_world(Section w, WorldConfig& c, const FailFn& fail) {
  w.get("n_users", c.n_users);
  w.get("horizon_s", c.horizon_s);
  w.get("tick_s", c.tick_s);
  w.get("interval_s", c.interval_s);
  {
    Section b = w.sub("bounds");
    b.get("origin_lat_deg", c.mobility.bounds.origin.lat_deg);
    b.get("origin_lon_deg", c.mobility.bounds.origin.lon_deg);
    b.get("width_m", c.mobility.bounds.width_m);
    b.get("height_m", c.mobility.bounds.height_m);
    b.finish();
  }
  {
    Section m = w.sub("mobility");
    if (m.has("model")) {
      std::string name;
      m.get("model", name);
      try {
        c.mobility.model = mobility_model_from_string(name);
      } catch (const ConfigError& e) {
        fail(m.child("model"), e.what());
      }
    }
    m.get("max_speed_mps", c.mobility.max_speed_mps);
    m.get("pause_min_s", c.mobility.pause_min_s);
    m.get("pause_max_s", c.mobility.pause_max_s);
    m.get("household_size", c.mobility.household_size);
    m.get("office_size", c.mobility.office_size);
    m.get("desk_spacing_m", c.mobility.desk_spacing_m);
    m.get("work_start_s", c.mobility.work_start_s);
    m.get("work_end_s", c.mobility.work_end_s);
    m.get("schedule_jitter_s", c.mobility.schedule_jitter_s);
    for_each_object(m, "scripts", fail, [&](Section& item, std::size_t) {
      UserId u;
      if (!item.has("user")) fail(item.path(), "script needs a user");
      item.get("user", u);
      if (c.mobility.scripts.contains(u)) fail(item.child("user"), "duplicate script for this user");
      std::vector<Waypoint>& path = c.mobility.scripts[u];
      if (!item.has("waypoints")) fail(item.path(), "script needs waypoints");
      const json& pts = item.raw("waypoints");
      if (!pts.is_array() || pts.empty()) fail(item.child("waypoints"), "expected a non-empty list");
      for (std::size_t k = 0; k < pts.size(); ++k) {
        const json& p = pts[k];
        const std::string at = item.child("waypoints") + "/" + std::to_string(k);
        if (!p.is_array() || p.size() != 3 || !p[0].is_number_integer() || !p[1].is_number() || !p[2].is_number()) {
          fail(at, "expected [time_s, east_m, north_m]");
        }
        path.push_back({p[0].get<Seconds>(), p[1].get<double>(), p[2].get<double>()});
      }
    });
    m.finish();
  }
  {
    Section r = w.sub("radio");
    r.get("p0_dbm", c.radio.p0_dbm);
    r.get("path_loss_exponent", c.radio.path_loss_exponent);
    r.get("noise_sigma_db", c.radio.noise_sigma_db);
    r.get("max_range_m", c.radio.max_range_m);
    r.get("band_min_dbm", c.radio.band.min_dbm);
    r.get("band_max_dbm", c.radio.band.max_dbm);
    r.finish();
  }
  {
    Section e = w.sub("epidemic");
    e.get("p_direct_per_contact_interval", c.epidemic.p_direct_per_contact_interval);
    e.get("p_indirect_per_exposure", c.epidemic.p_indirect_per_exposure);
    e.get("infectious_delay_s", c.epidemic.infectious_delay_s);
    e.get("report_delay_s", c.epidemic.report_delay_s);
    e.get("report_fraction", c.epidemic.report_fraction);
    c.epidemic.seed_infected = get_list<UserId>(e, "seed_infected", fail);
    for_each_object(e, "scripted", fail, [&](Section& item, std::size_t) {
      ScriptedCase sc;
      if (!item.has("user")) fail(item.path(), "scripted case needs a user");
      item.get("user", sc.user);
      item.get("infected_at_s", sc.infected_at_s);
      item.get_optional("report_at_s", sc.report_at_s);
      c.epidemic.scripted.push_back(sc);
    });
    Section f = e.sub("fomite");
    f.get("exposure_radius_m", c.epidemic.fomite.exposure_radius_m);
    f.get("halflife_s", c.epidemic.fomite.halflife_s);
    f.get("cutoff", c.epidemic.fomite.cutoff);
    f.finish();
    e.finish();
  }
  for_each_object(w, "beacons", fail, [&](Section& item, std::size_t i) {
    BeaconConfig b;
    b.id = "ap" + std::to_string(i);
    item.get("id", b.id);
    item.get("east_m", b.at.east_m);
    item.get("north_m", b.at.north_m);
    c.beacons.push_back(b);
  });
  for_each_object(w, "walls", fail, [&](Section& item, std::size_t) {
    WallConfig wc;
    if (!item.has("a") || !item.has("b")) fail(item.path(), "wall needs endpoints a and b");
    item.get("a", wc.a);
    item.get("b", wc.b);
    c.walls.push_back(wc);
  });
  w.finish();
}

void read_protocol(Section p, ProtocolConfig& c, const FailFn& fail) {
  if (!p.has("name")) fail(p.path(), "missing protocol name");
  std::string name;
  p.get("name", name);
  try {
    c.kind = protocol_from_string(name);
  } catch (const ConfigError& e) {
    fail(p.child("name"), e.what());
  }
  {
    Section s = p.sub("tracetogether");
    s.get("tid_interval_s", c.tracetogether.tid_interval_s);
    s.finish();
  }
  {
    Section s = p.sub("dp3t");
    s.get("ephids_per_day", c.dp3t.ephids_per_day);
    s.get("match_horizon_days", c.dp3t.match_horizon_days);
    s.get("publish_rotated_key", c.dp3t.publish_rotated_key);
    s.finish();
  }
  {
    Section s = p.sub("altuwaiyan");
    s.get("bucket_s", c.altuwaiyan.bucket_s);
    s.get("message_bits", c.altuwaiyan.message_bits);
    s.get("static_map", c.altuwaiyan.static_map);
    s.finish();
  }
  {
    Section s = p.sub("reichert");
    s.get("tau_time_s", c.reichert.tau_time_s);
    s.get("tau_dist_m", c.reichert.tau_dist_m);
    s.get("gps_noise_m", c.reichert.gps_noise_m);
    s.finish();
  }
  p.finish();
}

void read_attack(Section& a, AttackConfig& c, const FailFn& fail) {
  if (!a.has("type")) fail(a.path(), "attack needs a type");
  std::string type;
  a.get("type", type);
  bool known = false;
  for (auto k : {AttackConfig::Kind::kRelay, AttackConfig::Kind::kRangeExtender,
                 AttackConfig::Kind::kTargetedIdentification, AttackConfig::Kind::kLinkability,
                 AttackConfig::Kind::kForgeStore}) {
    if (to_string(k) == type) {
      c.kind = k;
      known = true;
    }
  }
  if (!known) fail(a.child("type"), "unknown attack type '" + type + "'");
  switch (c.kind) {
    case AttackConfig::Kind::kRelay:
      if (!a.has("endpoint_a") || !a.has("endpoint_b")) fail(a.path(), "relay needs endpoint_a and endpoint_b");
      a.get("endpoint_a", c.relay.endpoint_a);
      a.get("endpoint_b", c.relay.endpoint_b);
      a.get("range_m", c.relay.range_m);
      a.get("latency_ticks", c.relay.latency_ticks);
      read_window(a, c.relay.active);
      break;
    case AttackConfig::Kind::kRangeExtender:
      if (!a.has("center")) fail(a.path(), "range_extender needs a center");
      a.get("center", c.extender.center);
      a.get("radius_m", c.extender.radius_m);
      a.get("rssi_dbm", c.extender.rssi_dbm);
      read_window(a, c.extender.active);
      break;
    case AttackConfig::Kind::kTargetedIdentification:
      if (!a.has("attacker")) fail(a.path(), "targeted_identification needs an attacker user");
      a.get("attacker", c.targeted.attacker);
      c.targeted.targets = get_list<UserId>(a, "targets", fail);
      a.get_optional("sight_m", c.targeted.sight_m);
      break;
    case AttackConfig::Kind::kLinkability:
      if (!a.has("victim")) fail(a.path(), "linkability needs a victim");
      a.get("victim", c.linkability.victim);
      a.get("leak_day", c.linkability.leak_day);
      c.linkability.sensors = get_list<LocalPoint>(a, "sensors", fail);
      a.get_optional("sensor_range_m", c.linkability.sensor_range_m);
      break;
    case AttackConfig::Kind::kForgeStore:
      if (!a.has("user")) fail(a.path(), "forge_store needs a user");
      a.get("user", c.forge.user);
      for_each_object(a, "actions", fail, [&](Section& item, std::size_t) {
        ForgeEdit e;
        std::string action;
        if (!item.has("action")) fail(item.path(), "forge action needs an action name");
        item.get("action", action);
        try {
          e.kind = forge_kind_from_string(action);
        } catch (const ConfigError& err) {
          fail(item.child("action"), err.what());
        }
        item.get("index", e.index);
        item.get("count", e.count);
        item.get("peer", e.peer);
        item.get("at_s", e.at_s);
        c.forge.edits.push_back(e);
      });
      break;
  }
}

void read_output(Section o, OutputConfig& c) {
  o.get("dir", c.dir);
  o.get("event_log", c.event_log);
  o.get("report", c.report);
  o.get("log_broadcasts", c.log_broadcasts);
  o.finish();
}

bool multiple_of(Seconds v, Seconds unit) { return unit > 0 && v > 0 && v % unit == 0; }

// Cross-field checks. `fail` never returns.
void check(const ScenarioConfig& c, const FailFn& fail) {
  const WorldConfig& w = c.world;
  if (w.n_users == 0) fail("/world/n_users", "must be at least 1");
  if (w.tick_s <= 0) fail("/world/tick_s", "must be positive");
  if (!multiple_of(w.horizon_s, w.tick_s)) fail("/world/horizon_s", "must be a positive multiple of tick_s");
  if (!multiple_of(w.interval_s, w.tick_s)) fail("/world/interval_s", "must be a positive multiple of tick_s");
  if (kSecondsPerDay % w.interval_s != 0) fail("/world/interval_s", "must divide one day");
  const Bounds& b = w.mobility.bounds;
  if (!is_valid(b.origin)) fail("/world/bounds", "origin is not a valid coordinate");
  if (!(b.width_m > 0.0) || !(b.height_m > 0.0)) fail("/world/bounds", "bounds are degenerate");
  if (!(w.mobility.max_speed_mps > 0.0)) fail("/world/mobility/max_speed_mps", "must be positive");
  if (w.mobility.pause_min_s < 0 || w.mobility.pause_max_s < w.mobility.pause_min_s) {
    fail("/world/mobility/pause_max_s", "pause range is empty");
  }
  if (w.mobility.household_size == 0) fail("/world/mobility/household_size", "must be at least 1");
  if (w.mobility.office_size == 0) fail("/world/mobility/office_size", "must be at least 1");
  {
    std::size_t i = 0;
    for (const auto& [u, path] : w.mobility.scripts) {
      if (u.index >= w.n_users) fail("/world/mobility/scripts/" + std::to_string(i) + "/user", "unknown user");
      ++i;
    }
  }
  if (w.mobility.model == MobilityModel::kScripted && w.mobility.scripts.size() != w.n_users) {
    fail("/world/mobility/scripts", "scripted mobility needs one script per user");
  }
  try {
    validate(w.radio);
  } catch (const ConfigError& e) {
    fail("/world/radio", e.what());
  }
  try {
    validate(w.epidemic);
  } catch (const ConfigError& e) {
    fail("/world/epidemic", e.what());
  }
  for (std::size_t i = 0; i < w.epidemic.seed_infected.size(); ++i) {
    if (w.epidemic.seed_infected[i].index >= w.n_users) {
      fail("/world/epidemic/seed_infected/" + std::to_string(i), "unknown user");
    }
  }
  std::set<UserId> scripted;
  for (std::size_t i = 0; i < w.epidemic.scripted.size(); ++i) {
    const ScriptedCase& sc = w.epidemic.scripted[i];
    const std::string at = "/world/epidemic/scripted/" + std::to_string(i);
    if (sc.user.index >= w.n_users) fail(at + "/user", "unknown user");
    if (!scripted.insert(sc.user).second) fail(at + "/user", "user scripted twice");
    if (sc.infected_at_s < 0 || sc.infected_at_s >= w.horizon_s) fail(at + "/infected_at_s", "outside the horizon");
    if (sc.report_at_s && (*sc.report_at_s < sc.infected_at_s || *sc.report_at_s > w.horizon_s)) {
      fail(at + "/report_at_s", "must lie between infected_at_s and the horizon");
    }
  }
  if (!(w.epidemic.fomite.cutoff > 0.0 && w.epidemic.fomite.cutoff < 1.0)) {
    fail("/world/epidemic/fomite/cutoff", "must be in (0, 1)");
  }
  std::set<std::string> beacon_ids;
  for (std::size_t i = 0; i < w.beacons.size(); ++i) {
    if (w.beacons[i].id.empty()) fail("/world/beacons/" + std::to_string(i) + "/id", "must not be empty");
    if (!beacon_ids.insert(w.beacons[i].id).second) {
      fail("/world/beacons/" + std::to_string(i) + "/id", "duplicate beacon id");
    }
  }

  if (!(c.thresholds.close_distance_m > 0.0)) fail("/thresholds/close_distance_m", "must be positive");
  if (!multiple_of(c.thresholds.min_duration_s, w.tick_s)) {
    fail("/thresholds/min_duration_s", "must be a positive multiple of tick_s");
  }

  const ProtocolConfig& p = c.protocol;
  if (!multiple_of(p.tracetogether.tid_interval_s, w.tick_s)) {
    fail("/protocol/tracetogether/tid_interval_s", "must be a positive multiple of tick_s");
  }
  if (p.dp3t.ephids_per_day == 0 || kSecondsPerDay % static_cast<Seconds>(p.dp3t.ephids_per_day) != 0 ||
      (kSecondsPerDay / static_cast<Seconds>(p.dp3t.ephids_per_day)) % w.tick_s != 0) {
    fail("/protocol/dp3t/ephids_per_day", "must split the day into whole ticks");
  }
  if (p.dp3t.match_horizon_days <= 0) fail("/protocol/dp3t/match_horizon_days", "must be positive");
  if (!multiple_of(p.altuwaiyan.bucket_s, w.tick_s)) {
    fail("/protocol/altuwaiyan/bucket_s", "must be a positive multiple of tick_s");
  }
  if (p.altuwaiyan.message_bits < 16 || p.altuwaiyan.message_bits > 64) {
    fail("/protocol/altuwaiyan/message_bits", "must be in [16, 64]");
  }
  if (p.reichert.tau_time_s <= 0) fail("/protocol/reichert/tau_time_s", "must be positive");
  if (!(p.reichert.tau_dist_m > 0.0)) fail("/protocol/reichert/tau_dist_m", "must be positive");
  if (!(p.reichert.gps_noise_m >= 0.0)) fail("/protocol/reichert/gps_noise_m", "must be non-negative");

  auto user_ok = [&](UserId u, const std::string& at) {
    if (u.index >= w.n_users) fail(at, "unknown user");
  };
  auto window_ok = [&](const TimeWindow& tw, const std::string& at) {
    if (tw.start_s < 0) fail(at + "/start_s", "must be non-negative");
    if (tw.end_s && *tw.end_s <= tw.start_s) fail(at + "/end_s", "must be after start_s");
  };
  for (std::size_t i = 0; i < c.attacks.size(); ++i) {
    const AttackConfig& a = c.attacks[i];
    const std::string at = "/attacks/" + std::to_string(i);
    switch (a.kind) {
      case AttackConfig::Kind::kRelay: {
        RelayLink link{to_geo(b, a.relay.endpoint_a), to_geo(b, a.relay.endpoint_b), a.relay.range_m,
                       a.relay.latency_ticks};
        try {
          validate(link, w.radio);
        } catch (const ConfigError& e) {
          fail(at, e.what());
        }
        window_ok(a.relay.active, at);
        break;
      }
      case AttackConfig::Kind::kRangeExtender: {
        RangeExtender ext{to_geo(b, a.extender.center), a.extender.radius_m, a.extender.rssi_dbm};
        try {
          validate(ext, w.radio);
        } catch (const ConfigError& e) {
          fail(at, e.what());
        }
        window_ok(a.extender.active, at);
        break;
      }
      case AttackConfig::Kind::kTargetedIdentification:
        user_ok(a.targeted.attacker, at + "/attacker");
        if (a.targeted.targets.empty()) fail(at + "/targets", "needs at least one target");
        for (std::size_t k = 0; k < a.targeted.targets.size(); ++k) {
          user_ok(a.targeted.targets[k], at + "/targets/" + std::to_string(k));
          if (a.targeted.targets[k] == a.targeted.attacker) {
            fail(at + "/targets/" + std::to_string(k), "the attacker cannot target itself");
          }
        }
        if (a.targeted.sight_m && !(*a.targeted.sight_m > 0.0)) fail(at + "/sight_m", "must be positive");
        break;
      case AttackConfig::Kind::kLinkability:
        user_ok(a.linkability.victim, at + "/victim");
        if (a.linkability.leak_day < 0 || a.linkability.leak_day * kSecondsPerDay >= w.horizon_s) {
          fail(at + "/leak_day", "outside the horizon");
        }
        if (a.linkability.sensor_range_m && !(*a.linkability.sensor_range_m > 0.0)) {
          fail(at + "/sensor_range_m", "must be positive");
        }
        break;
      case AttackConfig::Kind::kForgeStore:
        user_ok(a.forge.user, at + "/user");
        for (std::size_t k = 0; k < a.forge.edits.size(); ++k) {
          const ForgeEdit& e = a.forge.edits[k];
          const std::string ek = at + "/actions/" + std::to_string(k);
          if (e.kind == ForgeEdit::Kind::kInjectReplay) {
            user_ok(e.peer, ek + "/peer");
            if (e.at_s < 0 || e.at_s >= w.horizon_s) fail(ek + "/at_s", "outside the horizon");
          }
        }
        break;
    }
  }

  if (c.output.event_log.empty()) fail("/output/event_log", "must not be empty");
  if (c.output.report.empty()) fail("/output/report", "must not be empty");
}

[[noreturn]] void throw_at(const std::string& source, std::size_t line, const std::string& path,
                           const std::string& msg) {
  throw ConfigError(source + ":" + std::to_string(line) + ": " + (path.empty() ? "/" : path) + ": " + msg);
}

json point_json(const LocalPoint& p) { return json::array({p.east_m, p.north_m}); }

template <typename T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

ScenarioConfig parse_config(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < upto; ++i) line += text[i] == '\n';
    throw ConfigError(source + ":" + std::to_string(line) + ": invalid JSON: " + e.what());
  }
  const LineMap lines(text);
  const FailFn fail = [&](const std::string& path, const std::string& msg) {
    throw_at(source, lines.line_of(path), path, msg);
  };

  ScenarioConfig c;
  Section top(root, "", fail);
  if (top.has("schema_version")) {
    int v = 0;
    top.get("schema_version", v);
    if (v != kConfigSchemaVersion) {
      fail("/schema_version", "unsupported schema version " + std::to_string(v) + " (expected " +
                                  std::to_string(kConfigSchemaVersion) + ")");
    }
  }
  top.get("seed", c.seed);
  read_world(top.sub("world"), c.world, fail);
  c.world.epidemic.contact_interval_s = c.world.interval_s;
  {
    Section t = top.sub("thresholds");
    t.get("close_distance_m", c.thresholds.close_distance_m);
    t.get("min_duration_s", c.thresholds.min_duration_s);
    t.finish();
  }
  if (!top.has("protocol")) fail("", "missing protocol section");
  read_protocol(top.sub("protocol"), c.protocol, fail);
  for_each_object(top, "attacks", fail, [&](Section& item, std::size_t) {
    AttackConfig a;
    read_attack(item, a, fail);
    c.attacks.push_back(a);
  });
  read_output(top.sub("output"), c.output);
  top.finish();
  check(c, fail);
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

void validate(const ScenarioConfig& config) {
  check(config, [](const std::string& path, const std::string& msg) {
    throw ConfigError((path.empty() ? "/" : path) + ": " + msg);
  });
}

json to_json(const ScenarioConfig& c) {
  const WorldConfig& w = c.world;
  json scripts = json::array();
  for (const auto& [u, path] : w.mobility.scripts) {
    json pts = json::array();
    for (const Waypoint& p : path) pts.push_back(json::array({p.time_s, p.east_m, p.north_m}));
    scripts.push_back({{"user", u.index}, {"waypoints", pts}});
  }
  json seeds = json::array();
  for (UserId u : w.epidemic.seed_infected) seeds.push_back(u.index);
  json scripted = json::array();
  for (const ScriptedCase& sc : w.epidemic.scripted) {
    scripted.push_back({{"user", sc.user.index}, {"infected_at_s", sc.infected_at_s}, {"report_at_s", opt_json(sc.report_at_s)}});
  }
  json beacons = json::array();
  for (const BeaconConfig& b : w.beacons) beacons.push_back({{"id", b.id}, {"east_m", b.at.east_m}, {"north_m", b.at.north_m}});
  json walls = json::array();
  for (const WallConfig& wc : w.walls) walls.push_back({{"a", point_json(wc.a)}, {"b", point_json(wc.b)}});

  json attacks = json::array();
  for (const AttackConfig& a : c.attacks) {
    json j = {{"type", to_string(a.kind)}};
    switch (a.kind) {
      case AttackConfig::Kind::kRelay:
        j["endpoint_a"] = point_json(a.relay.endpoint_a);
        j["endpoint_b"] = point_json(a.relay.endpoint_b);
        j["range_m"] = a.relay.range_m;
        j["latency_ticks"] = a.relay.latency_ticks;
        j["start_s"] = a.relay.active.start_s;
        j["end_s"] = opt_json(a.relay.active.end_s);
        break;
      case AttackConfig::Kind::kRangeExtender:
        j["center"] = point_json(a.extender.center);
        j["radius_m"] = a.extender.radius_m;
        j["rssi_dbm"] = a.extender.rssi_dbm;
        j["start_s"] = a.extender.active.start_s;
        j["end_s"] = opt_json(a.extender.active.end_s);
        break;
      case AttackConfig::Kind::kTargetedIdentification: {
        j["attacker"] = a.targeted.attacker.index;
        json t = json::array();
        for (UserId u : a.targeted.targets) t.push_back(u.index);
        j["targets"] = t;
        j["sight_m"] = opt_json(a.targeted.sight_m);
        break;
      }
      case AttackConfig::Kind::kLinkability: {
        j["victim"] = a.linkability.victim.index;
        j["leak_day"] = a.linkability.leak_day;
        json s = json::array();
        for (const LocalPoint& p : a.linkability.sensors) s.push_back(point_json(p));
        j["sensors"] = s;
        j["sensor_range_m"] = opt_json(a.linkability.sensor_range_m);
        break;
      }
      case AttackConfig::Kind::kForgeStore: {
        j["user"] = a.forge.user.index;
        json acts = json::array();
        for (const ForgeEdit& e : a.forge.edits) {
          acts.push_back({{"action", to_string(e.kind)},
                          {"index", e.index},
                          {"count", e.count},
                          {"peer", e.peer.index},
                          {"at_s", e.at_s}});
        }
        j["actions"] = acts;
        break;
      }
    }
    attacks.push_back(j);
  }

  const MobilityConfig& m = w.mobility;
  const ProtocolConfig& p = c.protocol;
  return {
      {"schema_version", kConfigSchemaVersion},
      {"seed", c.seed},
      {"world",
       {{"n_users", w.n_users},
        {"horizon_s", w.horizon_s},
        {"tick_s", w.tick_s},
        {"interval_s", w.interval_s},
        {"bounds",
         {{"origin_lat_deg", m.bounds.origin.lat_deg},
          {"origin_lon_deg", m.bounds.origin.lon_deg},
          {"width_m", m.bounds.width_m},
          {"height_m", m.bounds.height_m}}},
        {"mobility",
         {{"model", to_string(m.model)},
          {"max_speed_mps", m.max_speed_mps},
          {"pause_min_s", m.pause_min_s},
          {"pause_max_s", m.pause_max_s},
          {"household_size", m.household_size},
          {"office_size", m.office_size},
          {"desk_spacing_m", m.desk_spacing_m},
          {"work_start_s", m.work_start_s},
          {"work_end_s", m.work_end_s},
          {"schedule_jitter_s", m.schedule_jitter_s},
          {"scripts", scripts}}},
        {"radio",
         {{"p0_dbm", w.radio.p0_dbm},
          {"path_loss_exponent", w.radio.path_loss_exponent},
          {"noise_sigma_db", w.radio.noise_sigma_db},
          {"max_range_m", w.radio.max_range_m},
          {"band_min_dbm", w.radio.band.min_dbm},
          {"band_max_dbm", w.radio.band.max_dbm}}},
        {"epidemic",
         {{"p_direct_per_contact_interval", w.epidemic.p_direct_per_contact_interval},
          {"p_indirect_per_exposure", w.epidemic.p_indirect_per_exposure},
          {"infectious_delay_s", w.epidemic.infectious_delay_s},
          {"report_delay_s", w.epidemic.report_delay_s},
          {"report_fraction", w.epidemic.report_fraction},
          {"seed_infected", seeds},
          {"scripted", scripted},
          {"fomite",
           {{"exposure_radius_m", w.epidemic.fomite.exposure_radius_m},
            {"halflife_s", w.epidemic.fomite.halflife_s},
            {"cutoff", w.epidemic.fomite.cutoff}}}}},
        {"beacons", beacons},
        {"walls", walls}}},
      {"thresholds",
       {{"close_distance_m", c.thresholds.close_distance_m}, {"min_duration_s", c.thresholds.min_duration_s}}},
      {"protocol",
       {{"name", to_string(p.kind)},
        {"tracetogether", {{"tid_interval_s", p.tracetogether.tid_interval_s}}},
        {"dp3t",
         {{"ephids_per_day", p.dp3t.ephids_per_day},
          {"match_horizon_days", p.dp3t.match_horizon_days},
          {"publish_rotated_key", p.dp3t.publish_rotated_key}}},
        {"altuwaiyan",
         {{"bucket_s", p.altuwaiyan.bucket_s},
          {"message_bits", p.altuwaiyan.message_bits},
          {"static_map", p.altuwaiyan.static_map}}},
        {"reichert",
         {{"tau_time_s", p.reichert.tau_time_s},
          {"tau_dist_m", p.reichert.tau_dist_m},
          {"gps_noise_m", p.reichert.gps_noise_m}}}}},
      {"attacks", attacks},
      {"output",
       {{"dir", c.output.dir},
        {"event_log", c.output.event_log},
        {"report", c.output.report},
        {"log_broadcasts", c.output.log_broadcasts}}},
  };
}

std::string config_hash(const ScenarioConfig& config) { return to_hex(hash(to_json(config).dump()).bytes); }

}  // namespace tracebench
