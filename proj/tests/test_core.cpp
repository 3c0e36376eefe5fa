#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "doctest.h"
#include "tracebench/core.hpp"
#include "tracebench/random.hpp"

using namespace tracebench;

namespace {

// Independent great-circle oracle.
double oracle_haversine(double lat1, double lon1, double lat2, double lon2) {
  constexpr double kR = 6371000.0;
  constexpr double kPi = 3.14159265358979323846;
  const double p1 = lat1 * kPi / 180, p2 = lat2 * kPi / 180;
  const double dp = p2 - p1, dl = (lon2 - lon1) * kPi / 180;
  const double h = std::pow(std::sin(dp / 2), 2) + std::cos(p1) * std::cos(p2) * std::pow(std::sin(dl / 2), 2);
  return 2 * kR * std::asin(std::sqrt(h));
}

const GeoPoint kOrigin{1.3521, 103.8198};

Trajectory constant_trajectory(UserId u, GeoPoint p, std::size_t ticks, Seconds tick_s) {
  Trajectory t{u, {}};
  for (std::size_t k = 0; k < ticks; ++k) t.samples.push_back({static_cast<Seconds>(k) * tick_s, p});
  return t;
}

// Brute force: per-tick pairwise scan, runs assembled separately.
std::vector<std::tuple<std::uint32_t, std::uint32_t, Seconds, Seconds>> brute_force_contacts(
    const TrajectoryMap& trajs, double threshold, Seconds min_duration, Seconds tick_s) {
  std::vector<std::tuple<std::uint32_t, std::uint32_t, Seconds, Seconds>> out;
  for (auto a = trajs.begin(); a != trajs.end(); ++a) {
    for (auto b = std::next(a); b != trajs.end(); ++b) {
      const std::size_t n = a->second.samples.size();
      std::vector<bool> close(n);
      for (std::size_t k = 0; k < n; ++k) {
        const auto& p = a->second.samples[k].point;
        const auto& q = b->second.samples[k].point;
        close[k] = oracle_haversine(p.lat_deg, p.lon_deg, q.lat_deg, q.lon_deg) <= threshold;
      }
      std::size_t k = 0;
      while (k < n) {
        if (!close[k]) {
          ++k;
          continue;
        }
        std::size_t e = k;
        while (e < n && close[e]) ++e;
        const Seconds dur = static_cast<Seconds>(e - k) * tick_s;
        if (dur >= min_duration) out.emplace_back(a->first.index, b->first.index, a->second.samples[k].time_s, dur);
        k = e;
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("distance_meters examples") {
  const GeoPoint p{0.0, 0.0};
  CHECK(distance_meters(p, p) == 0.0);
  // Frozen from the haversine oracle with R = 6371000 m.
  CHECK(distance_meters({0.0, 0.0}, {0.0, 0.001}) == doctest::Approx(111.19492664455875).epsilon(1e-9));
  const double hv = oracle_haversine(48.0, 6.0, 48.0, 6.0001);
  CHECK(std::abs(distance_meters({48.0, 6.0}, {48.0, 6.0001}) - hv) / hv < 1e-4);
  CHECK(haversine_meters({48.0, 6.0}, {48.0, 6.0001}) == doctest::Approx(hv).epsilon(1e-12));
}

TEST_CASE("distance_meters is symmetric and zero only on identical points") {
  RandomStream rng(7, "distance-symmetry");
  for (int i = 0; i < 1000; ++i) {
    const GeoPoint p{rng.uniform(-60, 60), rng.uniform(-179, 179)};
    const GeoPoint q = offset_meters(p, rng.uniform(-500, 500), rng.uniform(-500, 500));
    CHECK(distance_meters(p, q) == distance_meters(q, p));
    if (!(p == q)) CHECK(distance_meters(p, q) > 0.0);
    CHECK(distance_meters(p, q) == doctest::Approx(oracle_haversine(p.lat_deg, p.lon_deg, q.lat_deg, q.lon_deg))
                                       .epsilon(1e-3));
  }
}

TEST_CASE("offset_meters places points at the requested distance") {
  const GeoPoint q = offset_meters(kOrigin, 3.0, 4.0);
  CHECK(distance_meters(kOrigin, q) == doctest::Approx(5.0).epsilon(1e-6));
}

TEST_CASE("interval_of uses half-open intervals") {
  const Schedule s = make_schedule(10 * 900, 900);
  REQUIRE(s.size() == 10);
  CHECK(interval_of(s[3].start_s, s).index == 3);
  CHECK(interval_of(s[3].end_s, s).index == 4);
  CHECK_THROWS_AS(interval_of(-1, s), RangeError);
  CHECK_THROWS_AS(interval_of(9000, s), RangeError);

  RandomStream rng(3, "interval-scan");
  for (int i = 0; i < 2000; ++i) {
    const Seconds t = static_cast<Seconds>(rng.uniform_below(9000));
    std::int64_t expected = -1;
    for (const auto& iv : s) {
      if (t >= iv.start_s && t < iv.end_s) expected = iv.index;
    }
    CHECK(interval_of(t, s).index == expected);
  }
}

TEST_CASE("make_schedule truncates the last interval and validates input") {
  const Schedule s = make_schedule(1000, 300);
  REQUIRE(s.size() == 4);
  CHECK(s.back().end_s == 1000);
  CHECK_THROWS_AS(make_schedule(0, 60), ConfigError);
}

TEST_CASE("close_contact_oracle trivial cases") {
  TrajectoryMap trajs;
  trajs[{0}] = constant_trajectory({0}, kOrigin, 60, 60);
  trajs[{1}] = constant_trajectory({1}, offset_meters(kOrigin, 1.0, 0.0), 60, 60);
  auto enc = close_contact_oracle(trajs, 2.0, 900);
  REQUIRE(enc.size() == 1);
  CHECK(enc[0].a == UserId{0});
  CHECK(enc[0].b == UserId{1});
  CHECK(enc[0].interval.start_s == 0);
  CHECK(enc[0].interval.end_s == 3600);
  CHECK(enc[0].duration_s == 3600);
  CHECK(enc[0].min_distance_m == doctest::Approx(1.0).epsilon(1e-6));

  trajs[{1}] = constant_trajectory({1}, offset_meters(kOrigin, 100.0, 0.0), 60, 60);
  CHECK(close_contact_oracle(trajs, 2.0, 900).empty());
}

TEST_CASE("close_contact_oracle rejects mismatched tick grids") {
  TrajectoryMap trajs;
  trajs[{0}] = constant_trajectory({0}, kOrigin, 10, 60);
  trajs[{1}] = constant_trajectory({1}, kOrigin, 10, 30);
  CHECK_THROWS_AS(close_contact_oracle(trajs), ConfigError);
  trajs[{1}] = constant_trajectory({1}, kOrigin, 9, 60);
  CHECK_THROWS_AS(close_contact_oracle(trajs), ConfigError);
}

TEST_CASE("close_contact_oracle equals brute-force scan on random crossing walks") {
  RandomStream rng(11, "oracle-brute");
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t agents = 2 + rng.uniform_below(9);
    const std::size_t ticks = 50 + rng.uniform_below(950);
    const Seconds tick_s = 60;
    TrajectoryMap trajs;
    for (std::uint32_t a = 0; a < agents; ++a) {
      Trajectory t{{a}, {}};
      double x = rng.uniform(-6, 6), y = rng.uniform(-6, 6);
      for (std::size_t k = 0; k < ticks; ++k) {
        x = std::clamp(x + rng.uniform(-0.8, 0.8), -8.0, 8.0);
        y = std::clamp(y + rng.uniform(-0.8, 0.8), -8.0, 8.0);
        t.samples.push_back({static_cast<Seconds>(k) * tick_s, offset_meters(kOrigin, x, y)});
      }
      trajs[{a}] = t;
    }
    const Seconds min_dur = 60 * static_cast<Seconds>(1 + rng.uniform_below(5));
    const auto enc = close_contact_oracle(trajs, 2.0, min_dur);
    const auto expected = brute_force_contacts(trajs, 2.0, min_dur, tick_s);
    REQUIRE(enc.size() == expected.size());
    for (std::size_t i = 0; i < enc.size(); ++i) {
      CHECK(enc[i].a.index == std::get<0>(expected[i]));
      CHECK(enc[i].b.index == std::get<1>(expected[i]));
      CHECK(enc[i].interval.start_s == std::get<2>(expected[i]));
      CHECK(enc[i].duration_s == std::get<3>(expected[i]));
      CHECK(enc[i].min_distance_m <= 2.0);
      CHECK(enc[i].duration_s >= min_dur);
    }
  }
}

TEST_CASE("close_contact_oracle is invariant under relabeling") {
  RandomStream rng(5, "relabel");
  TrajectoryMap trajs;
  const std::size_t agents = 6;
  for (std::uint32_t a = 0; a < agents; ++a) {
    Trajectory t{{a}, {}};
    double x = rng.uniform(-3, 3), y = rng.uniform(-3, 3);
    for (std::size_t k = 0; k < 300; ++k) {
      x = std::clamp(x + rng.uniform(-0.5, 0.5), -4.0, 4.0);
      y = std::clamp(y + rng.uniform(-0.5, 0.5), -4.0, 4.0);
      t.samples.push_back({static_cast<Seconds>(k) * 60, offset_meters(kOrigin, x, y)});
    }
    trajs[{a}] = t;
  }
  const auto perm = rng.permutation(agents);
  TrajectoryMap relabeled;
  for (const auto& [u, t] : trajs) {
    Trajectory copy = t;
    copy.user = {static_cast<std::uint32_t>(perm[u.index])};
    relabeled[copy.user] = copy;
  }
  using Key = std::tuple<std::uint32_t, std::uint32_t, Seconds, Seconds>;
  std::set<Key> original, mapped;
  for (const auto& e : close_contact_oracle(trajs, 2.0, 120)) {
    const auto a = static_cast<std::uint32_t>(perm[e.a.index]);
    const auto b = static_cast<std::uint32_t>(perm[e.b.index]);
    original.insert({std::min(a, b), std::max(a, b), e.interval.start_s, e.duration_s});
  }
  for (const auto& e : close_contact_oracle(relabeled, 2.0, 120)) {
    CHECK(e.a < e.b);
    mapped.insert({e.a.index, e.b.index, e.interval.start_s, e.duration_s});
  }
  CHECK(original == mapped);
}

TEST_CASE("random stream is deterministic and forks independently") {
  RandomStream a(42, "x"), b(42, "x"), c(43, "x");
  const auto va = a.bytes(100), vb = b.bytes(100), vc = c.bytes(100);
  CHECK(va == vb);
  CHECK(va != vc);
  RandomStream f1 = RandomStream(42, "x").fork("child"), f2 = RandomStream(42, "x").fork("child");
  CHECK(f1.next_u64() == f2.next_u64());
  const auto perm = RandomStream(1, "p").permutation(96);
  std::vector<std::size_t> sorted = perm;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);
}
