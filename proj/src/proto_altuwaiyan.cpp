#include "tracebench/proto_altuwaiyan.hpp"

#include <algorithm>

#include "tracebench/protocol.hpp"

namespace tracebench {

namespace {

// Distances computed by inverting the radio model carry rounding error.
constexpr double kDistanceSlack = 1e-9;

Origin combine(Origin a, Origin b) { return a != Origin::kGenuine ? a : b; }

}  // namespace

void alt_sense(BucketedLog& log, std::uint64_t own_m, DeviceType own_p, std::int64_t bucket,
               const std::vector<ObservationTuple>& hearings) {
  if (hearings.empty()) return;
  auto& tuples = log.entries[bucket];
  auto upsert = [&](const ObservationTuple& t) {
    auto it = std::lower_bound(tuples.begin(), tuples.end(), t.m,
                               [](const ObservationTuple& x, std::uint64_t m) { return x.m < m; });
    if (it == tuples.end() || it->m != t.m) {
      tuples.insert(it, t);
    } else if (!it->own && t.r > it->r) {
      *it = t;
    } else if (!it->own && t.r == it->r && t.origin == Origin::kGenuine) {
      it->origin = Origin::kGenuine;
    }
  };
  ObservationTuple self{own_m, SignalStrength{0.0}, own_p, true, Origin::kGenuine};
  upsert(self);
  for (const ObservationTuple& h : hearings) {
    if (h.m == own_m) continue;
    upsert(h);
  }
}

BucketedLog alt_slice(const BucketedLog& log, std::int64_t first, std::int64_t last) {
  BucketedLog out;
  for (auto it = log.entries.lower_bound(first); it != log.entries.end() && it->first < last; ++it) {
    out.entries.insert(*it);
  }
  return out;
}

std::size_t alt_upload(MatchServerState& server, UserId reporter, const BucketedLog& log, std::uint64_t event_id) {
  auto& stored = server.infected_logs[reporter];
  const std::string who = user_party(reporter.index);
  std::size_t placed = 0;
  for (const auto& [bucket, tuples] : log.entries) {
    if (!stored.entries.emplace(bucket, tuples).second) continue;
    server.view.learn(FactKind::kTimestamp, "ts:" + who + "@" + std::to_string(bucket), event_id);
    const bool anchored = std::any_of(tuples.begin(), tuples.end(), [&](const ObservationTuple& t) {
      return !t.own && server.static_map.contains(t.m);
    });
    if (anchored) {
      server.view.learn(FactKind::kLocationPoint, location_subject(who, bucket), event_id);
      ++placed;
    }
  }
  return placed;
}

std::vector<std::pair<UserId, std::int64_t>> alt_timestamp_overlap(MatchServerState& server, UserId requester,
                                                                   const std::vector<std::int64_t>& buckets,
                                                                   std::uint64_t event_id) {
  const std::string who = user_party(requester.index);
  for (std::int64_t b : buckets) server.view.learn(FactKind::kTimestamp, "ts:" + who + "@" + std::to_string(b), event_id);
  std::vector<std::pair<UserId, std::int64_t>> out;
  for (const auto& [reporter, log] : server.infected_logs) {
    if (reporter == requester) continue;
    for (std::int64_t b : buckets) {
      if (log.entries.contains(b)) out.emplace_back(reporter, b);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

AltMatrix alt_build_matrix(const HEPublicKey& pk, const std::vector<HECiphertext>& enc_requester_ms,
                           const std::vector<ObservationTuple>& reporter_tuples, RandomStream& rand) {
  if (enc_requester_ms.empty() || reporter_tuples.empty()) throw ArgumentError("matrix needs tuples on both sides");
  AltMatrix mat;
  mat.rows = reporter_tuples.size();
  mat.cols = enc_requester_ms.size();
  mat.cells.reserve(mat.rows * mat.cols);
  for (const ObservationTuple& t : reporter_tuples) {
    for (const HECiphertext& c : enc_requester_ms) mat.cells.push_back(he_randomize(pk, he_sub_plain(pk, c, t.m), rand));
  }
  return mat;
}

std::vector<ObservationTuple> alt_client_match(const HESecretKey& sk, const AltMatrix& matrix,
                                               const std::vector<ObservationTuple>& own_tuples) {
  if (matrix.cols != own_tuples.size() || matrix.cells.size() != matrix.rows * matrix.cols) {
    throw ProtocolError("matrix is " + std::to_string(matrix.rows) + "x" + std::to_string(matrix.cols) + " but " +
                        std::to_string(own_tuples.size()) + " tuples are held");
  }
  std::vector<bool> matched(matrix.cols, false);
  for (std::size_t a = 0; a < matrix.rows; ++a) {
    for (std::size_t b = 0; b < matrix.cols; ++b) {
      if (he_is_zero(sk, matrix.at(a, b))) matched[b] = true;
    }
  }
  std::vector<ObservationTuple> out;
  for (std::size_t b = 0; b < matrix.cols; ++b) {
    if (matched[b]) out.push_back(own_tuples[b]);
  }
  return out;
}

void alt_receive_disclosure(MatchServerState& server, UserId requester, UserId reporter, std::int64_t bucket,
                            const std::vector<ObservationTuple>& disclosed, std::uint64_t event_id) {
  if (disclosed.empty()) return;
  server.view.learn(FactKind::kEncounterPair, pair_subject(requester.index, reporter.index, bucket), event_id);
  for (const ObservationTuple& t : disclosed) {
    if (!t.own && server.static_map.contains(t.m)) {
      server.view.learn(FactKind::kLocationPoint, location_subject(user_party(requester.index), bucket), event_id);
    }
  }
}

AltBucketEstimate alt_distance(const RadioModel& model, const std::vector<ObservationTuple>& disclosed,
                               const std::vector<ObservationTuple>& reporter_tuples) {
  AltBucketEstimate est;
  for (const ObservationTuple& d : disclosed) {
    auto it = std::find_if(reporter_tuples.begin(), reporter_tuples.end(),
                           [&](const ObservationTuple& t) { return t.m == d.m; });
    if (it == reporter_tuples.end()) continue;
    AltDeviceDistance dev;
    dev.m = d.m;
    dev.requester_m = d.own ? 0.0 : distance_from_rssi(model, d.r.rssi_dbm);
    dev.reporter_m = it->own ? 0.0 : distance_from_rssi(model, it->r.rssi_dbm);
    dev.bound_m = dev.requester_m + dev.reporter_m;
    dev.origin = combine(d.origin, it->origin);
    if (!est.bound_m || dev.bound_m < *est.bound_m) {
      est.bound_m = dev.bound_m;
      est.origin = dev.origin;
    } else if (dev.bound_m == *est.bound_m && dev.origin == Origin::kGenuine) {
      est.origin = Origin::kGenuine;
    }
    est.devices.push_back(dev);
  }
  return est;
}

AltVerdict alt_verdict(const std::map<std::int64_t, AltBucketEstimate>& buckets, double close_m, Seconds bucket_s,
                       Seconds min_duration_s) {
  AltVerdict v;
  Evidence ev;
  double sum = 0.0;
  for (const auto& [bucket, est] : buckets) {
    if (!est.bound_m) continue;
    v.bucket_bound_m[bucket] = *est.bound_m;
    sum += *est.bound_m;
    if (*est.bound_m <= close_m * (1.0 + kDistanceSlack)) ev.add(est.origin, bucket_s);
  }
  if (v.bucket_bound_m.empty()) return v;
  v.estimate_m = sum / static_cast<double>(v.bucket_bound_m.size());
  const RiskPolicy policy{0.0, min_duration_s};
  v.close_s = ev.total();
  v.verdict = ev.flagged(policy);
  v.origin = ev.attribution(policy);
  return v;
}

}  // namespace tracebench
