#include "tracebench/metrics.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "tracebench/core.hpp"
#include "tracebench/crypto.hpp"
#include "tracebench/event_log.hpp"
#include "tracebench/party_view.hpp"

namespace tracebench {

using nlohmann::json;

namespace {

constexpr int kReportSchemaVersion = 1;

json ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return nullptr;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::string pair_key(std::uint32_t a, std::uint32_t b, std::int64_t interval) {
  if (a > b) std::swap(a, b);
  return "pair:" + std::to_string(a) + "-" + std::to_string(b) + "@" + std::to_string(interval);
}

std::string world_hash(const json& config) {
  json w = config.value("world", json::object());
  w["seed"] = config.value("seed", 0);
  return to_hex(hash(w.dump()).view()).substr(0, 16);
}

}  // namespace

RunData read_run(std::istream& in, const std::string& name) {
  EventLogReader reader(in, name);
  RunData run;
  const json& header = reader.header();
  run.config = header.at("config");
  run.config_hash = header.at("config_hash").get<std::string>();
  run.seed = run.config.at("seed").get<std::uint64_t>();
  run.noise_sigma_db = run.config.at("world").at("radio").at("noise_sigma_db").get<double>();

  json r;
  while (reader.next(r)) {
    const std::string type = r.at("type").get<std::string>();
    if (type == "world") {
      run.n_users = r.at("n_users").get<std::uint32_t>();
    } else if (type == "setup") {
      run.protocol = r.at("protocol").get<std::string>();
      run.min_duration_s = r.at("min_duration_s").get<std::int64_t>();
      run.coverage_interval_s = r.at("coverage_interval_s").get<std::int64_t>();
    } else if (type == "encounter") {
      run.encounters.push_back({r.at("a").get<std::uint32_t>(), r.at("b").get<std::uint32_t>(),
                                r.at("start_s").get<std::int64_t>(), r.at("end_s").get<std::int64_t>(),
                                r.at("walled").get<bool>()});
    } else if (type == "report") {
      run.reports.push_back({r.at("user").get<std::uint32_t>(), r.at("time_s").get<std::int64_t>(),
                             r.at("window_start_s").get<std::int64_t>()});
    } else if (type == "alert") {
      run.alerts.push_back(
          {r.at("reporter").get<std::uint32_t>(), r.at("contact").get<std::uint32_t>(), r.at("origin").get<std::string>()});
    } else if (type == "transmission") {
      run.transmissions.push_back({r.at("source").get<std::uint32_t>(), r.at("target").get<std::uint32_t>(),
                                   r.at("time_s").get<std::int64_t>(), r.at("mode").get<std::string>()});
    } else if (type == "radio_contact") {
      run.radio_contacts.insert(pair_key(r.at("a").get<std::uint32_t>(), r.at("b").get<std::uint32_t>(),
                                         r.at("interval").get<std::int64_t>()));
    } else if (type == "fact") {
      run.facts[r.at("party").get<std::string>()][r.at("kind").get<std::string>()].insert(
          r.at("subject").get<std::string>());
    } else if (type == "disclosed_points") {
      auto& d = run.disclosed_points[r.at("party").get<std::string>()];
      d.first += r.at("points").get<std::uint64_t>();
      d.second += r.at("located").get<std::uint64_t>();
    } else if (type == "finding") {
      run.findings.push_back(r);
    } else if (type == "forgery") {
      run.forgeries.push_back(r);
    } else if (type == "anomaly") {
      run.anomalies.push_back(r);
    } else if (type == "injection") {
      run.injections.push_back(r);
    } else if (type == "message") {
      run.messages.push_back({r.at("from").get<std::string>(), r.at("to").get<std::string>(),
                              r.at("kind").get<std::string>(), r.at("count").get<std::uint64_t>(),
                              r.at("bytes").get<std::uint64_t>()});
    } else if (type == "matching_cost") {
      json c = r;
      for (const char* k : {"id", "chain", "type", "protocol"}) c.erase(k);
      run.matching_cost = c;
    }
  }
  run.final_chain = reader.chain();
  if (run.protocol.empty()) throw LogError(name + ": log has no setup record");
  return run;
}

json compute_utility(const RunData& run) {
  // Ground truth: the part of each non-walled encounter inside the
  // reporter's upload window, kept when it still reaches min_duration.
  std::set<std::pair<std::uint32_t, std::uint32_t>> truth;
  for (const auto& rep : run.reports) {
    for (const auto& e : run.encounters) {
      if (e.walled || (e.a != rep.user && e.b != rep.user)) continue;
      const std::int64_t lo = std::max(e.start_s, rep.window_start_s);
      const std::int64_t hi = std::min(e.end_s, rep.time_s);
      if (hi - lo >= run.min_duration_s) truth.insert({rep.user, e.a == rep.user ? e.b : e.a});
    }
  }

  std::map<std::pair<std::uint32_t, std::uint32_t>, std::string> alerted;  // directed pair -> first origin
  for (const auto& a : run.alerts) alerted.emplace(std::make_pair(a.reporter, a.contact), a.origin);

  auto walled_between = [&](std::uint32_t a, std::uint32_t b) {
    return std::any_of(run.encounters.begin(), run.encounters.end(), [&](const RunData::Encounter& e) {
      return e.walled && ((e.a == a && e.b == b) || (e.a == b && e.b == a));
    });
  };

  std::set<std::uint32_t> reporters;
  for (const auto& rep : run.reports) reporters.insert(rep.user);

  std::uint64_t detected = 0, false_alerts = 0, false_from_reporters = 0;
  std::map<std::string, std::uint64_t> causes{{"adversary", 0}, {"wall", 0}, {"radio_noise", 0}, {"other", 0}};
  std::set<std::pair<std::uint32_t, std::uint32_t>> false_pairs;
  for (const auto& [pair, origin] : alerted) {
    if (truth.contains(pair)) {
      ++detected;
      continue;
    }
    ++false_alerts;
    false_from_reporters += reporters.contains(pair.first) ? 1 : 0;
    false_pairs.insert({std::min(pair.first, pair.second), std::max(pair.first, pair.second)});
    if (origin != "genuine") {
      ++causes["adversary"];
    } else if (walled_between(pair.first, pair.second)) {
      ++causes["wall"];
    } else if (run.noise_sigma_db > 0.0) {
      ++causes["radio_noise"];
    } else {
      ++causes["other"];
    }
  }

  // Rate over the reporter-rooted pairs; an alert naming a non-reporter is
  // still a false alert but lies outside this universe.
  const std::uint64_t candidate_pairs = reporters.size() * (run.n_users > 0 ? run.n_users - 1 : 0);
  const std::uint64_t negatives = candidate_pairs - std::min<std::uint64_t>(candidate_pairs, truth.size());

  std::set<std::uint32_t> alerted_contacts;
  for (const auto& [pair, origin] : alerted) alerted_contacts.insert(pair.second);
  std::uint64_t indirect = 0, indirect_missed = 0;
  for (const auto& t : run.transmissions) {
    if (t.mode != "indirect") continue;
    ++indirect;
    if (!alerted_contacts.contains(t.target)) ++indirect_missed;
  }

  json cause_json = json::object();
  for (const auto& [k, v] : causes) cause_json[k] = v;
  return {{"recall", ratio(detected, truth.size())},
          {"precision", ratio(detected, alerted.size())},
          {"false_alert_rate", ratio(false_from_reporters, negatives)},
          {"indirect_miss_rate", ratio(indirect_missed, indirect)},
          {"true_contacts", truth.size()},
          {"detected_true_contacts", detected},
          {"alerts", alerted.size()},
          {"false_alerts", false_alerts},
          {"false_alert_causes", cause_json},
          {"false_contact_pairs", false_pairs.size()},
          {"indirect_transmissions", indirect},
          {"indirect_missed", indirect_missed},
          {"reporters", reporters.size()}};
}

json compute_privacy(const RunData& run) {
  std::set<std::string> reporter_ids;
  for (const auto& rep : run.reports) reporter_ids.insert(identity_subject(rep.user));

  std::set<std::string> parties;
  for (const auto& [p, f] : run.facts) parties.insert(p);
  for (const auto& [p, d] : run.disclosed_points) parties.insert(p);

  std::uint64_t linked_sightings = 0;
  json targeted = json::array();
  json linkability = json::array();
  for (const json& f : run.findings) {
    const std::string attack = f.at("attack").get<std::string>();
    if (attack == "targeted_identification") {
      std::set<std::uint32_t> reported_targets, identified;
      for (const json& t : f.at("targets")) {
        if (reporter_ids.contains(identity_subject(t.get<std::uint32_t>()))) reported_targets.insert(t.get<std::uint32_t>());
      }
      for (const json& u : f.at("identified")) identified.insert(u.get<std::uint32_t>());
      std::uint64_t correct = 0;
      for (std::uint32_t u : identified) correct += reported_targets.contains(u) ? 1 : 0;
      const bool applicable = f.at("applicable").get<bool>();
      targeted.push_back({{"attacker", f.at("attacker")},
                          {"applicable", applicable},
                          {"targets", f.at("targets").size()},
                          {"reported_targets", reported_targets.size()},
                          {"identified", identified.size()},
                          {"sightings", f.at("sightings")},
                          {"soundness", applicable ? ratio(correct, identified.size()) : json(nullptr)},
                          {"completeness", applicable ? ratio(correct, reported_targets.size()) : json(nullptr)}});
    } else if (attack == "linkability") {
      const auto victim = f.at("victim").get<std::uint32_t>();
      const auto leak_day = f.at("leak_day").get<std::int64_t>();
      const std::int64_t rotation = f.at("rotation_day").is_null() ? std::numeric_limits<std::int64_t>::max()
                                                                    : f.at("rotation_day").get<std::int64_t>();
      std::uint64_t heard_before = 0, linked_before = 0, heard_after = 0, linked_after = 0, misattributed = 0;
      for (const json& s : f.at("sightings")) {
        const std::int64_t day = s.at(0).get<std::int64_t>() / kSecondsPerDay;
        const bool linked = !s.at(2).is_null();
        if (s.at(1).get<std::uint32_t>() != victim) {
          misattributed += linked ? 1 : 0;
          continue;
        }
        if (day < leak_day) continue;
        if (day >= rotation) {
          ++heard_after;
          linked_after += linked ? 1 : 0;
        } else {
          ++heard_before;
          linked_before += linked ? 1 : 0;
        }
      }
      linked_sightings += f.at("linked").get<std::uint64_t>();
      const bool applicable = f.at("applicable").get<bool>();
      linkability.push_back({{"victim", victim},
                             {"applicable", applicable},
                             {"leak_day", leak_day},
                             {"rotation_day", f.at("rotation_day")},
                             {"heard_before_rotation", heard_before},
                             {"linked_before_rotation", linked_before},
                             {"heard_after_rotation", heard_after},
                             {"linked_after_rotation", linked_after},
                             {"misattributed", misattributed},
                             {"linked_fraction_before_rotation", ratio(linked_before, heard_before)},
                             {"linked_fraction_after_rotation", ratio(linked_after, heard_after)}});
    }
  }

  json out = json::object();
  for (const std::string& party : parties) {
    json counts = json::object();
    for (const char* kind : {"identity-link", "location-point", "timestamp", "encounter-pair", "key-material", "risk-flag"}) {
      counts[kind] = 0;
    }
    std::uint64_t covered = 0, identified = 0;
    auto pf = run.facts.find(party);
    if (pf != run.facts.end()) {
      for (const auto& [kind, subjects] : pf->second) counts[kind] = subjects.size();
      if (auto it = pf->second.find("encounter-pair"); it != pf->second.end()) {
        for (const std::string& s : it->second) covered += run.radio_contacts.contains(s) ? 1 : 0;
      }
      if (auto it = pf->second.find("identity-link"); it != pf->second.end()) {
        for (const std::string& id : reporter_ids) {
          identified += (it->second.contains(id) || it->second.contains("infected:" + id)) ? 1 : 0;
        }
      }
    }
    const auto dp = run.disclosed_points.contains(party) ? run.disclosed_points.at(party) : std::pair<std::uint64_t, std::uint64_t>{};
    json summary = {{"facts", counts},
                    {"mobility_coverage_fraction", ratio(covered, run.radio_contacts.size())},
                    {"covered_radio_contacts", covered},
                    {"reported_points", dp.first},
                    {"absolute_locations_recovered", dp.second},
                    {"absolute_location_fraction", ratio(dp.second, dp.first)},
                    {"identified_infected_count", identified},
                    {"linked_sightings", party == "attacker" ? linked_sightings : 0}};
    out[party] = summary;
  }
  return {{"parties", out},
          {"radio_contacts", run.radio_contacts.size()},
          {"targeted_identification", targeted},
          {"linkability", linkability}};
}

json compute_authenticity(const RunData& run) {
  std::uint64_t accepted = 0, rejected = 0, injected = 0, deleted = 0;
  for (const json& f : run.forgeries) {
    accepted += f.at("accepted").get<std::uint64_t>();
    rejected += f.at("rejected").get<std::uint64_t>();
    injected += f.at("injected").get<std::uint64_t>();
    deleted += f.at("deleted").get<std::uint64_t>();
  }
  std::uint64_t unauthentic = 0, stale = 0, foreign_own = 0;
  for (const json& a : run.anomalies) {
    unauthentic += a.at("unauthentic").get<std::uint64_t>();
    stale += a.at("stale").get<std::uint64_t>();
    foreign_own += a.at("foreign_own").get<std::uint64_t>();
  }
  json injections = json::object();
  for (const json& i : run.injections) {
    json& slot = injections[i.at("attack").get<std::string>()];
    if (slot.is_null()) slot = {{"events", 0}, {"hearings", 0}};
    slot["events"] = slot["events"].get<std::uint64_t>() + i.at("events").get<std::uint64_t>();
    slot["hearings"] = slot["hearings"].get<std::uint64_t>() + i.at("hearings").get<std::uint64_t>();
  }
  return {{"forged_accepted", accepted},
          {"forged_rejected", rejected},
          {"forged_injected", injected},
          {"forged_deleted", deleted},
          {"rejected_records", {{"unauthentic", unauthentic}, {"stale", stale}, {"foreign_own", foreign_own}}},
          {"injections", injections}};
}

json compute_cost(const RunData& run) {
  json by_kind = json::array();
  std::map<std::string, std::array<std::uint64_t, 4>> by_party;  // sent msgs, sent bytes, recv msgs, recv bytes
  std::uint64_t messages = 0, bytes = 0;
  for (const auto& m : run.messages) {
    by_kind.push_back({{"from", m.from}, {"to", m.to}, {"kind", m.kind}, {"count", m.count}, {"bytes", m.bytes}});
    auto& s = by_party[m.from];
    s[0] += m.count;
    s[1] += m.bytes;
    auto& r = by_party[m.to];
    r[2] += m.count;
    r[3] += m.bytes;
    messages += m.count;
    bytes += m.bytes;
  }
  json parties = json::object();
  for (const auto& [p, s] : by_party) {
    parties[p] = {{"sent_messages", s[0]}, {"sent_bytes", s[1]}, {"received_messages", s[2]}, {"received_bytes", s[3]}};
  }
  return {{"protocol", run.protocol},
          {"messages", messages},
          {"bytes", bytes},
          {"by_party", parties},
          {"by_kind", by_kind},
          {"matching", run.matching_cost.value_or(json::object())}};
}

json compute_report(const RunData& run) {
  return {{"schema_version", kReportSchemaVersion},
          {"protocol", run.protocol},
          {"seed", run.seed},
          {"config_hash", run.config_hash},
          {"world_hash", world_hash(run.config)},
          {"log_chain", run.final_chain},
          {"world",
           {{"n_users", run.n_users},
            {"encounters", run.encounters.size()},
            {"radio_contacts", run.radio_contacts.size()},
            {"reports", run.reports.size()},
            {"transmissions", run.transmissions.size()}}},
          {"utility", compute_utility(run)},
          {"privacy", compute_privacy(run)},
          {"authenticity", compute_authenticity(run)},
          {"cost", compute_cost(run)}};
}

json report_from_log(std::istream& log, const std::string& name) { return compute_report(read_run(log, name)); }

std::string render_report(const json& report) { return report.dump(2) + "\n"; }

namespace {

std::string cell(const json& v) {
  if (v.is_null()) return "n/a";
  if (v.is_number_float()) {
    std::ostringstream os;
    os.precision(4);
    os << std::fixed << v.get<double>();
    return os.str();
  }
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

const char* authority_party(const std::string& protocol) {
  if (protocol == "tracetogether") return "moh";
  if (protocol == "dp3t") return "backend";
  if (protocol == "altuwaiyan") return "match-server";
  return "ha";
}

json party_field(const json& report, const std::string& party, const char* field) {
  const json& parties = report.at("privacy").at("parties");
  if (!parties.contains(party)) return party == "attacker" ? json(0) : json(nullptr);
  return parties.at(party).at(field);
}

std::uint64_t fact_total(const json& report, const std::string& party) {
  const json& parties = report.at("privacy").at("parties");
  if (!parties.contains(party)) return 0;
  std::uint64_t n = 0;
  for (const auto& [k, v] : parties.at(party).at("facts").items()) n += v.get<std::uint64_t>();
  return n;
}

}  // namespace

CompareTable compare_reports(const std::vector<json>& reports, bool force) {
  if (reports.size() < 2) throw ArgumentError("compare needs at least two reports");
  const json& first = reports.front();
  if (!force) {
    for (std::size_t i = 1; i < reports.size(); ++i) {
      if (reports[i].at("world_hash") != first.at("world_hash")) {
        throw ArgumentError("report " + std::to_string(i + 1) + " was run on a different world (seed " +
                            reports[i].at("seed").dump() + " vs " + first.at("seed").dump() +
                            "); rerun on a shared seed or pass --force");
      }
    }
  }

  CompareTable t;
  t.columns = {"protocol",         "seed",          "recall",          "precision",         "false_alert_rate",
               "indirect_miss_rate", "alerts",     "false_contact_pairs", "authority",     "authority_facts",
               "mobility_coverage", "locations_recovered", "identified_infected", "attacker_linked_sightings",
               "forged_accepted",  "forged_rejected", "messages",     "bytes"};
  const std::set<std::string> additive = {"alerts",         "false_contact_pairs", "authority_facts",
                                          "locations_recovered", "identified_infected", "attacker_linked_sightings",
                                          "forged_accepted", "forged_rejected", "messages", "bytes"};
  std::map<std::string, std::uint64_t> totals;
  for (const json& r : reports) {
    const std::string authority = authority_party(r.at("protocol").get<std::string>());
    const json& u = r.at("utility");
    std::map<std::string, json> row = {
        {"protocol", r.at("protocol")},
        {"seed", r.at("seed")},
        {"recall", u.at("recall")},
        {"precision", u.at("precision")},
        {"false_alert_rate", u.at("false_alert_rate")},
        {"indirect_miss_rate", u.at("indirect_miss_rate")},
        {"alerts", u.at("alerts")},
        {"false_contact_pairs", u.at("false_contact_pairs")},
        {"authority", authority},
        {"authority_facts", fact_total(r, authority)},
        {"mobility_coverage", party_field(r, authority, "mobility_coverage_fraction")},
        {"locations_recovered", party_field(r, authority, "absolute_locations_recovered")},
        {"identified_infected", party_field(r, authority, "identified_infected_count")},
        {"attacker_linked_sightings", party_field(r, "attacker", "linked_sightings")},
        {"forged_accepted", r.at("authenticity").at("forged_accepted")},
        {"forged_rejected", r.at("authenticity").at("forged_rejected")},
        {"messages", r.at("cost").at("messages")},
        {"bytes", r.at("cost").at("bytes")}};
    std::vector<std::string> cells;
    for (const std::string& c : t.columns) {
      const json& v = row.at(c);
      if (additive.contains(c) && v.is_number_unsigned()) totals[c] += v.get<std::uint64_t>();
      cells.push_back(cell(v));
    }
    t.rows.push_back(std::move(cells));
  }
  std::vector<std::string> total_row;
  for (const std::string& c : t.columns) {
    if (c == "protocol") {
      total_row.push_back("total");
    } else {
      total_row.push_back(additive.contains(c) ? std::to_string(totals[c]) : "");
    }
  }
  t.rows.push_back(std::move(total_row));
  return t;
}

std::string to_csv(const CompareTable& table) {
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << '\n';
  };
  line(table.columns);
  for (const auto& r : table.rows) line(r);
  return os.str();
}

std::string to_markdown(const CompareTable& table) {
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& cells) {
    os << '|';
    for (const auto& c : cells) os << ' ' << c << " |";
    os << '\n';
  };
  line(table.columns);
  os << '|';
  for (std::size_t i = 0; i < table.columns.size(); ++i) os << " --- |";
  os << '\n';
  for (const auto& r : table.rows) line(r);
  return os.str();
}

}  // namespace tracebench
