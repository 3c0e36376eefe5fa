#include "tracebench/proto_reichert.hpp"

#include <algorithm>
#include <numeric>

namespace tracebench {

namespace {

CostEstimate cost_for(std::uint64_t comparisons) {
  CostEstimate c;
  c.comparisons = comparisons;
  c.estimated_gates = comparisons * kGatesPerComparison;
  c.estimated_bytes = c.estimated_gates * kBytesPerGate;
  return c;
}

}  // namespace

const MatchingJob& rch_ingest(HAState& ha, const std::string& victim, std::vector<GeoTimePoint> points,
                              const RchThresholds& thresholds, std::uint64_t event_id) {
  if (thresholds.time_s <= 0 || !(thresholds.dist_m > 0.0)) throw ConfigError("matching thresholds must be positive");
  MatchingJob job;
  job.victim = victim;
  job.points = std::move(points);
  job.thresholds = thresholds;
  job.cost = cost_for(job.points.size());
  for (const GeoTimePoint& p : job.points) {
    ha.view.learn(FactKind::kLocationPoint, location_subject(victim, p.t.start_s), event_id);
  }
  ha.jobs.push_back(std::move(job));
  return ha.jobs.back();
}

CostEstimate rch_cost(const MatchingJob& job, std::size_t requester_size) {
  if (job.points.empty() || requester_size == 0) throw ArgumentError("cost needs at least one point per side");
  return cost_for(static_cast<std::uint64_t>(job.points.size()) * requester_size);
}

RchSession rch_match(const MatchingJob& job, const std::vector<GeoTimePoint>& requester_points) {
  RchSession s;
  if (job.points.empty() || requester_points.empty()) return s;
  s.cost = rch_cost(job, requester_points.size());
  // Circuit plus input labels to the requester, the output label back.
  s.messages = 2;
  s.bytes = s.cost.estimated_bytes;

  std::vector<std::size_t> order(job.points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return job.points[a].t.start_s < job.points[b].t.start_s; });
  const Seconds tau = job.thresholds.time_s;
  for (const GeoTimePoint& q : requester_points) {
    auto lo = std::lower_bound(order.begin(), order.end(), q.t.start_s - tau,
                               [&](std::size_t i, Seconds t) { return job.points[i].t.start_s < t; });
    for (auto it = lo; it != order.end() && job.points[*it].t.start_s <= q.t.start_s + tau; ++it) {
      if (distance_meters(job.points[*it].point, q.point) <= job.thresholds.dist_m) {
        s.flag = true;
        return s;
      }
    }
  }
  return s;
}

}  // namespace tracebench
