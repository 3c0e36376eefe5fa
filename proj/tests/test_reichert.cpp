#include "doctest.h"
#include "tracebench/proto_reichert.hpp"
#include "tracebench/random.hpp"

using namespace tracebench;

namespace {

const GeoPoint kOrigin{1.35, 103.82};

GeoTimePoint at(Seconds t, double east, double north) {
  return {TimeInterval{t / 60, t, t + 60}, offset_meters(kOrigin, east, north)};
}

bool brute_force(const std::vector<GeoTimePoint>& a, const std::vector<GeoTimePoint>& b, const RchThresholds& th) {
  for (const auto& p : a) {
    for (const auto& q : b) {
      const Seconds dt = p.t.start_s > q.t.start_s ? p.t.start_s - q.t.start_s : q.t.start_s - p.t.start_s;
      if (dt <= th.time_s && distance_meters(p.point, q.point) <= th.dist_m) return true;
    }
  }
  return false;
}

std::vector<GeoTimePoint> random_points(RandomStream& rand, std::size_t n) {
  std::vector<GeoTimePoint> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(at(60 * static_cast<Seconds>(rand.uniform_below(600)), rand.uniform(0, 60), rand.uniform(0, 60)));
  }
  return out;
}

}  // namespace

TEST_CASE("ingest keeps points verbatim and the HA learns all of them") {
  HAState ha;
  const std::vector<GeoTimePoint> pts{at(0, 0, 0), at(60, 1, 0), at(120, 2, 0)};
  const MatchingJob& job = rch_ingest(ha, "user:1", pts, {});
  CHECK(job.points == pts);
  CHECK(job.cost.comparisons == 3);
  rch_ingest(ha, "user:2", {at(0, 5, 5)}, {});
  CHECK(ha.jobs.size() == 2);
  CHECK(ha.view.count(FactKind::kLocationPoint) == 4);
  CHECK(ha.view.size() == 4);
  CHECK_THROWS_AS(rch_ingest(ha, "user:3", pts, RchThresholds{0, 2.0}), ConfigError);
  CHECK_THROWS_AS(rch_ingest(ha, "user:3", pts, RchThresholds{900, 0.0}), ConfigError);
}

TEST_CASE("rch_match trivial cases") {
  HAState ha;
  const MatchingJob& job = rch_ingest(ha, "user:1", {at(1000, 3, 3)}, {});
  CHECK(rch_match(job, {at(1000, 3, 3)}).flag);
  CHECK_FALSE(rch_match(job, {at(1000 + 365 * kSecondsPerDay, 3, 3)}).flag);
  CHECK(rch_match(job, {at(1000 + 900, 4, 3)}).flag);
  CHECK_FALSE(rch_match(job, {at(1000 + 960, 4, 3)}).flag);
  CHECK_FALSE(rch_match(job, {at(1000, 6, 3)}).flag);
  CHECK_FALSE(rch_match(job, {}).flag);
  const std::size_t facts = ha.view.size();
  rch_match(job, {at(1000, 3, 3), at(2000, 9, 9)});
  CHECK(ha.view.size() == facts);
}

TEST_CASE("rch_match equals the brute-force predicate on random instances") {
  RandomStream rand(1, "rch-oracle");
  int mismatches = 0, positives = 0;
  for (int trial = 0; trial < 300; ++trial) {
    HAState ha;
    RchThresholds th{static_cast<Seconds>(60 + rand.uniform_below(1800)), rand.uniform(0.5, 5.0)};
    const auto a = random_points(rand, 1 + rand.uniform_below(60));
    const auto b = random_points(rand, 1 + rand.uniform_below(60));
    const MatchingJob& job = rch_ingest(ha, "v", a, th);
    const bool want = brute_force(a, b, th);
    positives += want;
    mismatches += rch_match(job, b).flag != want;
  }
  CHECK(mismatches == 0);
  CHECK(positives > 30);
  CHECK(positives < 270);
}

TEST_CASE("rch_cost is the declared product formula") {
  HAState ha;
  std::vector<GeoTimePoint> pts;
  for (int i = 0; i < 100; ++i) pts.push_back(at(60 * i, 0, 0));
  const MatchingJob& one = rch_ingest(ha, "a", {pts[0]}, {});
  CHECK(rch_cost(one, 1).comparisons == 1);
  const MatchingJob& hundred = rch_ingest(ha, "b", pts, {});
  const CostEstimate c = rch_cost(hundred, 100);
  CHECK(c.comparisons == 10000);
  CHECK(c.estimated_gates == 10000 * kGatesPerComparison);
  CHECK(c.estimated_bytes == c.estimated_gates * kBytesPerGate);
  CHECK(rch_cost(hundred, 50).comparisons * 2 == c.comparisons);
  CHECK(rch_cost(hundred, 200).comparisons == 4 * rch_cost(hundred, 50).comparisons);
  CHECK_THROWS_AS(rch_cost(hundred, 0), ArgumentError);

  const RchSession s = rch_match(hundred, std::vector<GeoTimePoint>(30, at(0, 50, 50)));
  CHECK(s.cost == rch_cost(hundred, 30));
  CHECK(s.bytes == s.cost.estimated_bytes);
  CHECK(s.messages == 2);
}
