#include <algorithm>
#include <set>
#include <sstream>

#include "doctest.h"
#include "tracebench/core.hpp"
#include "tracebench/event_log.hpp"
#include "tracebench/metrics.hpp"
#include "tracebench/party_view.hpp"
#include "tracebench/random.hpp"

using namespace tracebench;
using nlohmann::json;

namespace {

struct LogBuilder {
  explicit LogBuilder(std::uint64_t seed = 1, double noise = 0.0, std::uint32_t n_users = 4,
                      std::int64_t min_duration_s = 900, const std::string& protocol = "dp3t")
      : config{{"seed", seed}, {"world", {{"n_users", n_users}, {"radio", {{"noise_sigma_db", noise}}}}}},
        writer(out, config, "hash") {
    writer.append({{"type", "world"}, {"n_users", n_users}});
    writer.append({{"type", "setup"},
                   {"protocol", protocol},
                   {"n_users", n_users},
                   {"min_duration_s", min_duration_s},
                   {"coverage_interval_s", 900}});
  }

  void encounter(std::uint32_t a, std::uint32_t b, std::int64_t start, std::int64_t end, bool walled = false) {
    writer.append({{"type", "encounter"}, {"a", a}, {"b", b}, {"start_s", start}, {"end_s", end},
                   {"min_distance_m", 1.0}, {"walled", walled}});
  }
  void report(std::uint32_t user, std::int64_t t, std::int64_t window_start) {
    writer.append({{"type", "report"}, {"user", user}, {"time_s", t}, {"window_start_s", window_start}});
  }
  void alert(std::uint32_t reporter, std::uint32_t contact, const std::string& origin = "genuine") {
    writer.append({{"type", "alert"}, {"protocol", "dp3t"}, {"reporter", reporter}, {"contact", contact},
                   {"score", 1.0}, {"origin", origin}});
  }
  void transmission(std::uint32_t source, std::uint32_t target, const std::string& mode) {
    writer.append({{"type", "transmission"}, {"source", source}, {"target", target}, {"time_s", 0}, {"mode", mode}});
  }
  void fact(const std::string& party, const std::string& kind, const std::string& subject) {
    writer.append({{"type", "fact"}, {"party", party}, {"kind", kind}, {"subject", subject}, {"source", 0}});
  }
  void radio_contact(std::uint32_t a, std::uint32_t b, std::int64_t interval) {
    writer.append({{"type", "radio_contact"}, {"a", a}, {"b", b}, {"interval", interval}});
  }

  std::string text() {
    writer.close();
    return out.str();
  }
  json report_json() {
    std::istringstream in(text());
    return report_from_log(in, "events.jsonl");
  }

  json config;
  std::ostringstream out;
  EventLogWriter writer;
};

void check_rate(const json& v) {
  if (v.is_null()) return;
  CHECK(v.get<double>() >= 0.0);
  CHECK(v.get<double>() <= 1.0);
}

}  // namespace

TEST_CASE("zero denominators are null, not zero") {
  LogBuilder log;
  const json u = log.report_json()["utility"];
  CHECK(u["recall"].is_null());
  CHECK(u["precision"].is_null());
  CHECK(u["false_alert_rate"].is_null());
  CHECK(u["indirect_miss_rate"].is_null());
  CHECK(u["true_contacts"] == 0);
}

TEST_CASE("utility matches a brute-force oracle on random logs") {
  RandomStream rand(11, "metrics-oracle");
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<std::uint32_t>(3 + rand.uniform_below(6));
    const std::int64_t min_dur = 60 * static_cast<std::int64_t>(1 + rand.uniform_below(20));
    LogBuilder log(1, 0.0, n, min_dur);

    struct E { std::uint32_t a, b; std::int64_t s, e; bool walled; };
    struct R { std::uint32_t u; std::int64_t t, w; };
    std::vector<E> es;
    std::vector<R> rs;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> alerts;
    std::vector<std::pair<std::uint32_t, std::string>> transmissions;
    for (std::uint64_t k = rand.uniform_below(12); k > 0; --k) {
      auto a = static_cast<std::uint32_t>(rand.uniform_below(n)), b = static_cast<std::uint32_t>(rand.uniform_below(n));
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      const auto s = static_cast<std::int64_t>(rand.uniform_below(10000));
      es.push_back({a, b, s, s + static_cast<std::int64_t>(rand.uniform_below(3000)), rand.uniform_below(5) == 0});
      log.encounter(es.back().a, es.back().b, es.back().s, es.back().e, es.back().walled);
    }
    for (std::uint64_t k = rand.uniform_below(4); k > 0; --k) {
      const auto t = static_cast<std::int64_t>(rand.uniform_below(14000));
      rs.push_back({static_cast<std::uint32_t>(rand.uniform_below(n)), t,
                    std::max<std::int64_t>(0, t - static_cast<std::int64_t>(rand.uniform_below(12000)))});
      log.report(rs.back().u, rs.back().t, rs.back().w);
    }
    for (std::uint64_t k = rand.uniform_below(10); k > 0; --k) {
      const auto a = static_cast<std::uint32_t>(rand.uniform_below(n)), b = static_cast<std::uint32_t>(rand.uniform_below(n));
      if (a == b) continue;
      alerts.push_back({a, b});
      log.alert(a, b);
    }
    for (std::uint64_t k = rand.uniform_below(4); k > 0; --k) {
      transmissions.push_back({static_cast<std::uint32_t>(rand.uniform_below(n)), rand.uniform_below(2) ? "indirect" : "direct"});
      log.transmission(0, transmissions.back().first, transmissions.back().second);
    }
    const json u = log.report_json()["utility"];

    auto is_true = [&](std::uint32_t r, std::uint32_t c) {
      for (const R& rep : rs) {
        if (rep.u != r) continue;
        for (const E& e : es) {
          const bool involves = (e.a == r && e.b == c) || (e.a == c && e.b == r);
          if (!involves || e.walled) continue;
          if (std::min(e.e, rep.t) - std::max(e.s, rep.w) >= min_dur) return true;
        }
      }
      return false;
    };
    std::size_t truth = 0;
    for (std::uint32_t r = 0; r < n; ++r) {
      for (std::uint32_t c = 0; c < n; ++c) truth += r != c && is_true(r, c);
    }
    std::set<std::pair<std::uint32_t, std::uint32_t>> distinct(alerts.begin(), alerts.end());
    std::size_t hits = 0;
    for (const auto& [r, c] : distinct) hits += is_true(r, c);
    std::size_t indirect = 0, missed = 0;
    for (const auto& [target, mode] : transmissions) {
      if (mode != "indirect") continue;
      ++indirect;
      missed += std::none_of(distinct.begin(), distinct.end(), [&](const auto& p) { return p.second == target; });
    }

    CHECK(u["true_contacts"] == truth);
    CHECK(u["detected_true_contacts"] == hits);
    CHECK(u["alerts"] == distinct.size());
    if (truth > 0) {
      CHECK(u["recall"].get<double>() == doctest::Approx(static_cast<double>(hits) / static_cast<double>(truth)));
    } else {
      CHECK(u["recall"].is_null());
    }
    if (!distinct.empty()) {
      CHECK(u["precision"].get<double>() == doctest::Approx(static_cast<double>(hits) / static_cast<double>(distinct.size())));
    }
    CHECK(u["indirect_miss_rate"] ==
          (indirect == 0 ? json(nullptr) : json(static_cast<double>(missed) / static_cast<double>(indirect))));
    for (const char* k : {"recall", "precision", "false_alert_rate", "indirect_miss_rate"}) check_rate(u[k]);
  }
}

TEST_CASE("true contacts are clipped to the upload window") {
  LogBuilder log;
  log.encounter(0, 1, 0, 1000);     // only 400 s inside the window
  log.encounter(0, 2, 600, 2000);   // 1400 s inside
  log.encounter(0, 3, 2000, 5000);  // after the report
  log.report(0, 2000, 600);
  log.alert(0, 1);
  log.alert(0, 2);
  const json u = log.report_json()["utility"];
  CHECK(u["true_contacts"] == 1);
  CHECK(u["recall"] == 1.0);
  CHECK(u["precision"] == 0.5);
  // candidate pairs 1 * 3, minus one true contact
  CHECK(u["false_alert_rate"] == 0.5);
}

TEST_CASE("false alerts are tagged with one cause each") {
  SUBCASE("adversary before wall") {
    LogBuilder log;
    log.encounter(0, 1, 0, 2000, true);
    log.report(0, 3000, 0);
    log.alert(0, 1, "forged");
    const json c = log.report_json()["utility"]["false_alert_causes"];
    CHECK(c["adversary"] == 1);
    CHECK(c["wall"] == 0);
  }
  SUBCASE("wall, then noise, then other") {
    LogBuilder log(1, 4.0);
    log.encounter(0, 1, 0, 2000, true);
    log.report(0, 3000, 0);
    log.alert(0, 1);
    log.alert(0, 2);
    const json u = log.report_json()["utility"];
    CHECK(u["false_alert_causes"]["wall"] == 1);
    CHECK(u["false_alert_causes"]["radio_noise"] == 1);
    CHECK(u["false_alert_causes"]["other"] == 0);
    CHECK(u["true_contacts"] == 0);
  }
  SUBCASE("noiseless unexplained alert") {
    LogBuilder log;
    log.report(0, 3000, 0);
    log.alert(0, 2);
    log.alert(2, 0);
    const json u = log.report_json()["utility"];
    CHECK(u["false_alert_causes"]["other"] == 2);
    CHECK(u["false_contact_pairs"] == 1);
  }
}

TEST_CASE("mobility coverage is the join of party facts with radio contacts") {
  LogBuilder log(1, 0.0, 4, 900, "tracetogether");
  log.radio_contact(0, 1, 5);
  log.radio_contact(1, 2, 5);
  log.radio_contact(2, 3, 6);
  log.radio_contact(0, 3, 7);
  log.fact("moh", "encounter-pair", "pair:0-1@5");
  log.fact("moh", "encounter-pair", "pair:2-3@6");
  log.fact("moh", "encounter-pair", "pair:0-2@9");  // never heard on the radio
  log.fact("moh", "identity-link", identity_subject(2));
  log.fact("attacker", "identity-link", "infected:" + identity_subject(0));
  log.report(0, 100, 0);
  log.report(2, 100, 0);
  const json p = log.report_json()["privacy"]["parties"];
  CHECK(p["moh"]["covered_radio_contacts"] == 2);
  CHECK(p["moh"]["mobility_coverage_fraction"] == 0.5);
  CHECK(p["moh"]["facts"]["encounter-pair"] == 3);
  CHECK(p["moh"]["facts"]["location-point"] == 0);
  CHECK(p["moh"]["identified_infected_count"] == 1);
  CHECK(p["attacker"]["identified_infected_count"] == 1);
  CHECK(p["moh"]["absolute_location_fraction"].is_null());
}

TEST_CASE("linkability fractions count the victim's sightings from the leak day") {
  LogBuilder log;
  const std::int64_t d = kSecondsPerDay;
  json sightings = json::array({
      json::array({0 * d + 10, 0, nullptr}),  // before the leak: ignored
      json::array({1 * d + 10, 0, 1}),
      json::array({2 * d + 10, 0, 2}),
      json::array({2 * d + 20, 0, nullptr}),
      json::array({3 * d + 10, 0, nullptr}),  // after rotation
      json::array({3 * d + 20, 1, nullptr}),  // someone else, unlinked
      json::array({3 * d + 30, 1, 3}),        // someone else, wrongly linked
  });
  log.writer.append({{"type", "finding"}, {"attack", "linkability"}, {"applicable", true}, {"victim", 0},
                     {"leak_day", 1}, {"rotation_day", 3}, {"linked", 3}, {"sightings", sightings}});
  const json l = log.report_json()["privacy"]["linkability"][0];
  CHECK(l["heard_before_rotation"] == 3);
  CHECK(l["linked_before_rotation"] == 2);
  CHECK(l["heard_after_rotation"] == 1);
  CHECK(l["linked_after_rotation"] == 0);
  CHECK(l["misattributed"] == 1);
  CHECK(l["linked_fraction_after_rotation"] == 0.0);
}

TEST_CASE("targeted identification soundness and completeness") {
  LogBuilder log;
  log.report(1, 100, 0);
  log.report(2, 100, 0);
  log.writer.append({{"type", "finding"}, {"attack", "targeted_identification"}, {"applicable", true},
                     {"attacker", 0}, {"targets", {1, 2, 3}}, {"sightings", 10}, {"identified", {1, 3}}});
  const json t = log.report_json()["privacy"]["targeted_identification"][0];
  CHECK(t["reported_targets"] == 2);
  CHECK(t["identified"] == 2);
  CHECK(t["soundness"] == 0.5);
  CHECK(t["completeness"] == 0.5);
}

TEST_CASE("report rendering is canonical and replay-stable") {
  LogBuilder log;
  log.encounter(0, 1, 0, 1000);
  log.report(0, 2000, 0);
  log.alert(0, 1);
  const std::string text = log.text();
  std::istringstream a(text), b(text);
  const std::string first = render_report(report_from_log(a, "x"));
  CHECK(first == render_report(report_from_log(b, "x")));
  CHECK(first.back() == '\n');
  CHECK(render_report(json::parse(first)) == first);
}

TEST_CASE("damaged logs are refused") {
  LogBuilder log;
  log.report(0, 10, 0);
  const std::string text = log.text();
  std::istringstream cut(text.substr(0, text.size() / 2));
  CHECK_THROWS_AS(report_from_log(cut, "x"), LogError);
  std::string tampered = text;
  tampered.replace(tampered.find("\"time_s\":10"), 11, "\"time_s\":11");
  std::istringstream bad(tampered);
  CHECK_THROWS_AS(report_from_log(bad, "x"), LogError);
}

TEST_CASE("compare tabulates, totals additive columns and refuses mixed worlds") {
  auto make = [](std::uint64_t seed, std::uint32_t alerts) {
    LogBuilder log(seed);
    log.report(0, 5000, 0);
    for (std::uint32_t c = 1; c <= alerts; ++c) log.alert(0, c);
    return log.report_json();
  };
  const json a = make(1, 1), b = make(1, 3), other = make(2, 2);
  const CompareTable t = compare_reports({a, b});
  REQUIRE(t.rows.size() == 3);
  const auto col = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(t.columns.begin(), t.columns.end(), name) - t.columns.begin());
  };
  CHECK(t.rows[0][col("alerts")] == "1");
  CHECK(t.rows[1][col("alerts")] == "3");
  CHECK(t.rows[2][col("protocol")] == "total");
  CHECK(t.rows[2][col("alerts")] == "4");
  CHECK(t.rows[2][col("recall")].empty());
  CHECK(t.rows[0][col("recall")] == "n/a");
  CHECK(t.rows[0][col("precision")] == "0.0000");

  CHECK_THROWS_AS(compare_reports({a, other}), ArgumentError);
  CHECK(compare_reports({a, other}, true).rows.size() == 3);
  CHECK_THROWS_AS(compare_reports({a}), ArgumentError);

  const std::string csv = to_csv(t);
  CHECK(csv.rfind("protocol,seed,recall,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  const std::string md = to_markdown(t);
  CHECK(md.find("| --- |") != std::string::npos);
  CHECK(md.find("| total |") != std::string::npos);
}
