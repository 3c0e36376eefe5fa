#include <cmath>
#include <functional>

#include "doctest.h"
#include "tracebench/world.hpp"

using namespace tracebench;

namespace {

const GeoPoint kOrigin{1.3521, 103.8198};

// Hand-built trajectories on a 60 s grid; pos(u, t) returns local meters.
TrajectoryMap make_trajs(std::size_t n, std::size_t ticks,
                         const std::function<std::pair<double, double>(std::uint32_t, Seconds)>& pos) {
  TrajectoryMap out;
  for (std::uint32_t u = 0; u < n; ++u) {
    Trajectory t{{u}, {}};
    for (std::size_t k = 0; k < ticks; ++k) {
      const Seconds time = static_cast<Seconds>(k) * 60;
      const auto [x, y] = pos(u, time);
      t.samples.push_back({time, offset_meters(kOrigin, x, y)});
    }
    out[{u}] = t;
  }
  return out;
}

MobilityConfig small_bounds(MobilityModel model) {
  MobilityConfig m;
  m.model = model;
  m.bounds.width_m = 300;
  m.bounds.height_m = 300;
  return m;
}

}  // namespace

TEST_CASE("stationary mobility yields constant trajectories") {
  const auto trajs = generate_trajectories(1, 5, 3600, 60, small_bounds(MobilityModel::kStationary));
  REQUIRE(trajs.size() == 5);
  for (const auto& [u, t] : trajs) {
    CHECK(t.samples.size() == 60);
    for (const auto& s : t.samples) CHECK(s.point == t.samples.front().point);
  }
}

TEST_CASE("mobility is deterministic under a seed") {
  for (auto model : {MobilityModel::kRandomWaypoint, MobilityModel::kCommute}) {
    const auto a = generate_trajectories(9, 6, kSecondsPerDay, 60, small_bounds(model));
    const auto b = generate_trajectories(9, 6, kSecondsPerDay, 60, small_bounds(model));
    const auto c = generate_trajectories(10, 6, kSecondsPerDay, 60, small_bounds(model));
    bool same = true, differs = false;
    for (const auto& [u, t] : a) {
      for (std::size_t k = 0; k < t.samples.size(); ++k) {
        same = same && t.samples[k].point == b.at(u).samples[k].point;
        differs = differs || !(t.samples[k].point == c.at(u).samples[k].point);
      }
    }
    CHECK(same);
    CHECK(differs);
  }
}

TEST_CASE("random waypoint respects the speed bound and the area") {
  MobilityConfig m = small_bounds(MobilityModel::kRandomWaypoint);
  m.max_speed_mps = 1.2;
  const auto trajs = generate_trajectories(4, 20, 2 * kSecondsPerDay, 60, m);
  const GeoPoint far_corner = offset_meters(m.bounds.origin, m.bounds.width_m, m.bounds.height_m);
  for (const auto& [u, t] : trajs) {
    for (std::size_t k = 1; k < t.samples.size(); ++k) {
      CHECK(haversine_meters(t.samples[k - 1].point, t.samples[k].point) <= 1.2 * 60 * 1.0001);
    }
    for (const auto& s : t.samples) {
      CHECK(s.point.lat_deg >= m.bounds.origin.lat_deg - 1e-9);
      CHECK(s.point.lat_deg <= far_corner.lat_deg + 1e-9);
    }
  }
}

TEST_CASE("commute mobility groups office colleagues at desks") {
  MobilityConfig m = small_bounds(MobilityModel::kCommute);
  m.office_size = 3;
  m.desk_spacing_m = 1.5;
  const auto trajs = generate_trajectories(6, 3, kSecondsPerDay, 60, m);
  // At noon everyone is at their desk.
  const std::size_t noon = 12 * 60;
  CHECK(distance_meters(trajs.at({0}).samples[noon].point, trajs.at({1}).samples[noon].point) <= 3.01);
  CHECK(distance_meters(trajs.at({0}).samples[noon].point, trajs.at({2}).samples[noon].point) <= 3.01);
}

TEST_CASE("mobility configuration errors") {
  MobilityConfig m = small_bounds(MobilityModel::kStationary);
  m.bounds.width_m = 0;
  CHECK_THROWS_AS(generate_trajectories(1, 3, 3600, 60, m), ConfigError);
  CHECK_THROWS_AS(generate_trajectories(1, 0, 3600, 60, small_bounds(MobilityModel::kStationary)), ConfigError);
  MobilityConfig s = small_bounds(MobilityModel::kScripted);
  s.scripts[{0}] = {{0, 0, 0}, {60, 200, 0}};
  CHECK_THROWS_AS(generate_trajectories(1, 1, 3600, 60, s), ConfigError);  // 200 m in one tick
}

TEST_CASE("radio_observe path loss") {
  RadioModel r;
  r.noise_sigma_db = 0.0;
  RandomStream rng(1, "radio");
  CHECK(radio_observe(r, 1.0, rng)->rssi_dbm == doctest::Approx(r.p0_dbm));
  CHECK(radio_observe(r, 10.0, rng)->rssi_dbm == doctest::Approx(r.p0_dbm - 20.0));
  CHECK_FALSE(radio_observe(r, r.max_range_m + 0.01, rng).has_value());
  CHECK(radio_observe(r, 0.0, rng)->rssi_dbm == doctest::Approx(r.p0_dbm + 20.0));  // clamped to 0.1 m
  CHECK(distance_from_rssi(r, noiseless_rssi(r, 3.7)) == doctest::Approx(3.7));

  r.noise_sigma_db = 4.0;
  double sum = 0, sq = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double v = radio_observe(r, 2.0, rng)->rssi_dbm - noiseless_rssi(r, 2.0);
    sum += v;
    sq += v * v;
  }
  CHECK(std::abs(sum / n) < 4.0 * 4.0 / std::sqrt(n));
  CHECK(std::sqrt(sq / n) == doctest::Approx(4.0).epsilon(0.03));
}

TEST_CASE("tick_broadcasts hearing sets") {
  RadioModel r;
  r.noise_sigma_db = 0.0;
  RandomStream rng(2, "bcast");

  SUBCASE("pair one meter apart hears each other, isolated user hears nothing") {
    const auto trajs = make_trajs(3, 1, [](std::uint32_t u, Seconds) {
      return u == 2 ? std::pair{500.0, 500.0} : std::pair{static_cast<double>(u), 0.0};
    });
    std::map<UserId, Bytes> payloads{{{0}, {0}}, {{1}, {1}}, {{2}, {2}}};
    const auto events = tick_broadcasts(trajs, 0, payloads, r, rng);
    REQUIRE(events.size() == 3);
    REQUIRE(events[0].heard_by.size() == 1);
    CHECK(events[0].heard_by[0].user == UserId{1});
    REQUIRE(events[1].heard_by.size() == 1);
    CHECK(events[1].heard_by[0].user == UserId{0});
    CHECK(events[2].heard_by.empty());
  }

  SUBCASE("hearing set equals brute-force range filter") {
    RandomStream place(3, "place");
    std::vector<std::pair<double, double>> xy(30);
    for (auto& p : xy) p = {place.uniform(0, 40), place.uniform(0, 40)};
    const auto trajs = make_trajs(30, 1, [&](std::uint32_t u, Seconds) { return xy[u]; });
    std::map<UserId, Bytes> payloads;
    for (std::uint32_t u = 0; u < 30; ++u) payloads[{u}] = {static_cast<std::uint8_t>(u)};
    for (const auto& ev : tick_broadcasts(trajs, 0, payloads, r, rng)) {
      std::vector<std::uint32_t> expected;
      for (std::uint32_t v = 0; v < 30; ++v) {
        if (v == ev.sender.index) continue;
        const double d = std::hypot(xy[v].first - xy[ev.sender.index].first, xy[v].second - xy[ev.sender.index].second);
        if (d <= r.max_range_m) expected.push_back(v);
      }
      REQUIRE(ev.heard_by.size() == expected.size());
      for (std::size_t i = 0; i < expected.size(); ++i) CHECK(ev.heard_by[i].user.index == expected[i]);
    }
  }
}

TEST_CASE("walls separate points and mark encounters") {
  const GeoPoint a = offset_meters(kOrigin, 0, 0), b = offset_meters(kOrigin, 2, 0);
  const Wall w{offset_meters(kOrigin, 1, -5), offset_meters(kOrigin, 1, 5)};
  CHECK(separated_by_wall(a, b, {w}));
  CHECK_FALSE(separated_by_wall(a, offset_meters(kOrigin, 0.5, 0), {w}));
}

TEST_CASE("epidemic without transmission keeps only seed infections") {
  const auto trajs = make_trajs(4, 120, [](std::uint32_t u, Seconds) { return std::pair{u * 1.0, 0.0}; });
  const auto enc = close_contact_oracle(trajs);
  EpidemicConfig cfg;
  cfg.p_direct_per_contact_interval = 0.0;
  cfg.p_indirect_per_exposure = 0.0;
  cfg.seed_infected = {{0}};
  const auto tl = run_epidemic(1, trajs, cfg, enc);
  CHECK(tl.transmissions.empty());
  REQUIRE(tl.infections.size() == 1);
  CHECK(tl.infections.at({0}).mode == TransmissionMode::kSeed);
}

TEST_CASE("forced chain A-B-C infects everyone in order") {
  // A meets B during hour 1, B meets C during hour 3; otherwise 100 m apart.
  const auto trajs = make_trajs(3, 5 * 60, [](std::uint32_t u, Seconds t) {
    const bool ab = t >= 3600 && t < 7200;
    const bool bc = t >= 3 * 3600 && t < 4 * 3600;
    if (u == 0) return std::pair{0.0, 0.0};
    if (u == 1) return ab ? std::pair{1.0, 0.0} : (bc ? std::pair{200.0, 0.0} : std::pair{100.0, 100.0});
    return bc ? std::pair{201.0, 0.0} : std::pair{300.0, 300.0};
  });
  const auto enc = close_contact_oracle(trajs);
  REQUIRE(enc.size() == 2);
  EpidemicConfig cfg;
  cfg.p_direct_per_contact_interval = 1.0;
  cfg.infectious_delay_s = 0;
  cfg.report_delay_s = 600;
  cfg.seed_infected = {{0}};
  const auto tl = run_epidemic(4, trajs, cfg, enc);
  REQUIRE(tl.infections.size() == 3);
  REQUIRE(tl.transmissions.size() == 2);
  CHECK(tl.transmissions[0].source == UserId{0});
  CHECK(tl.transmissions[0].target == UserId{1});
  CHECK(tl.transmissions[0].time_s == 3600);
  CHECK(tl.transmissions[1].target == UserId{2});
  CHECK(tl.transmissions[1].time_s == 3 * 3600);
  for (const auto& [u, rec] : tl.infections) CHECK(*rec.report_at_s == rec.infected_at_s + 600);
}

TEST_CASE("direct transmission counts match the binomial expectation") {
  // Ten susceptibles, each within 1 m of the seed for exactly one contact slot.
  const std::size_t k = 10;
  const auto trajs = make_trajs(k + 1, 12 * 60, [](std::uint32_t u, Seconds t) {
    if (u == 0) return std::pair{0.0, 0.0};
    const Seconds start = static_cast<Seconds>(u) * 3600;
    if (t >= start && t < start + 900) return std::pair{1.0, 0.0};
    return std::pair{50.0 * u, 50.0};
  });
  const auto enc = close_contact_oracle(trajs);
  REQUIRE(enc.size() == k);
  EpidemicConfig cfg;
  cfg.p_direct_per_contact_interval = 0.3;
  cfg.infectious_delay_s = 0;
  cfg.seed_infected = {{0}};
  int infected = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    infected += static_cast<int>(run_epidemic(seed, trajs, cfg, enc).transmissions.size());
  }
  const double n = 100.0 * k, mean = n * 0.3, sigma = std::sqrt(n * 0.3 * 0.7);
  CHECK(std::abs(infected - mean) <= 3 * sigma);
}

TEST_CASE("walled encounters never transmit") {
  const auto trajs = make_trajs(2, 120, [](std::uint32_t u, Seconds) { return std::pair{u * 1.0, 0.0}; });
  const auto enc = close_contact_oracle(trajs);
  EpidemicConfig cfg;
  cfg.p_direct_per_contact_interval = 1.0;
  cfg.infectious_delay_s = 0;
  cfg.seed_infected = {{0}};
  const Wall w{offset_meters(kOrigin, 0.5, -5), offset_meters(kOrigin, 0.5, 5)};
  CHECK(encounter_walled(enc[0], trajs, {w}));
  CHECK(run_epidemic(1, trajs, cfg, enc, {w}).transmissions.empty());
  CHECK(run_epidemic(1, trajs, cfg, enc, {}).transmissions.size() == 1);
}

TEST_CASE("fomite transmission happens without any direct contact") {
  // Source sits on a bench for an hour and leaves; the target sits there two hours later.
  const auto trajs = make_trajs(2, 6 * 60, [](std::uint32_t u, Seconds t) {
    if (u == 0) return t < 3600 ? std::pair{10.0, 10.0} : std::pair{200.0, 200.0};
    return (t >= 3 * 3600 && t < 4 * 3600) ? std::pair{10.2, 10.0} : std::pair{400.0, 400.0};
  });
  const auto enc = close_contact_oracle(trajs);
  CHECK(enc.empty());
  EpidemicConfig cfg;
  cfg.p_direct_per_contact_interval = 1.0;
  cfg.p_indirect_per_exposure = 1.0;
  cfg.infectious_delay_s = 0;
  cfg.seed_infected = {{0}};
  const auto tl = run_epidemic(2, trajs, cfg, enc);
  REQUIRE(tl.transmissions.size() == 1);
  CHECK(tl.transmissions[0].mode == TransmissionMode::kIndirect);
  CHECK(tl.transmissions[0].time_s >= 3 * 3600);
  const FomiteDeposit d{kOrigin, 0, {0}, 3600};
  CHECK(fomite_viability(d, 3600) == doctest::Approx(0.5));
}

TEST_CASE("scripted cases carry explicit report times") {
  const auto trajs = make_trajs(2, 60, [](std::uint32_t u, Seconds) { return std::pair{u * 100.0, 0.0}; });
  EpidemicConfig cfg;
  cfg.scripted = {{{1}, 600, 1800}, {{0}, 0, std::nullopt}};
  const auto tl = run_epidemic(1, trajs, cfg, {});
  REQUIRE(tl.infections.size() == 2);
  CHECK(*tl.infections.at({1}).report_at_s == 1800);
  CHECK_FALSE(tl.infections.at({0}).report_at_s.has_value());
}

TEST_CASE("epidemic configuration is validated") {
  EpidemicConfig cfg;
  cfg.p_direct_per_contact_interval = 1.5;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
}
