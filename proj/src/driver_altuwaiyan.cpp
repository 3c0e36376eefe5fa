#include <atomic>
#include <exception>
#include <thread>

#include "sim_internal.hpp"
#include "tracebench/proto_altuwaiyan.hpp"

namespace tracebench::sim {

namespace {

constexpr double kForgedRssiDbm = -40.0;
// m(8) || r(8) || p(1)
constexpr std::uint64_t kTupleBytes = 17;

std::uint64_t read_u64_le(const Bytes& b) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

class AltuwaiyanDriver final : public Driver {
 public:
  explicit AltuwaiyanDriver(Context& ctx)
      : Driver(ctx),
        params_(ctx.config.protocol.altuwaiyan),
        beacon_rand_(ctx.seed, "beacon"),
        he_rand_(ctx.seed, "altuwaiyan-he") {}

  Seconds coverage_interval_s() const override { return params_.bucket_s; }

  void setup() override {
    for (std::uint32_t i = 0; i < ctx_.n_users; ++i) {
      m_.push_back(hashed_identifier(as_bytes("device:" + std::to_string(i)), params_.message_bits));
    }
    logs_.resize(ctx_.n_users);
    const Bounds& bounds = ctx_.config.world.mobility.bounds;
    for (const BeaconConfig& b : ctx_.config.world.beacons) {
      beacons_.push_back({b.id, to_geo(bounds, b.at)});
      beacon_m_.push_back(hashed_identifier(as_bytes("ap:" + b.id), params_.message_bits));
      if (params_.static_map) server_.static_map[beacon_m_.back()] = beacons_.back().location;
    }
  }

  std::map<UserId, Bytes> payloads(std::size_t, Seconds) override {
    std::map<UserId, Bytes> out;
    for (std::uint32_t i = 0; i < ctx_.n_users; ++i) out.emplace(UserId{i}, u64_le(m_[i]));
    ctx_.transcript.add("user", "air", "broadcast", out.size(), out.size() * 8);
    return out;
  }

  void sense(std::size_t tick, Seconds t, const std::vector<BroadcastEvent>& events) override {
    std::map<UserId, std::vector<ObservationTuple>> hearings;
    for (const BroadcastEvent& ev : events) {
      if (ev.payload.size() != 8) continue;
      const std::uint64_t m = read_u64_le(ev.payload);
      for (const Hearing& h : ev.heard_by) hearings[h.user].push_back({m, h.rssi, DeviceType::kPhone, false, ev.origin});
    }
    if (!beacons_.empty()) {
      for (const BeaconHearing& bh :
           tick_beacons(ctx_.trajectories, tick, beacons_, ctx_.config.world.radio, beacon_rand_)) {
        hearings[bh.user].push_back({beacon_m_[bh.beacon], bh.rssi, DeviceType::kAccessPoint, false, Origin::kGenuine});
      }
    }
    const std::int64_t bucket = t / params_.bucket_s;
    for (const auto& [u, hs] : hearings) alt_sense(logs_[u.index], m_[u.index], DeviceType::kPhone, bucket, hs);
  }

  void report(UserId user, Seconds t, Seconds window_start, std::uint64_t event_id) override {
    apply_forgery(user);
    const BucketedLog slice =
        alt_slice(logs_[user.index], window_start / params_.bucket_s, (t + params_.bucket_s - 1) / params_.bucket_s);
    std::size_t tuples = 0;
    for (const auto& [b, ts] : slice.entries) tuples += ts.size();
    const std::size_t located = alt_upload(server_, user, slice, event_id);
    ctx_.transcript.add("user", "match-server", "log_upload", 1, tuples * kTupleBytes + slice.entries.size() * 8);
    ctx_.log.append({{"type", "disclosed_points"},
                     {"protocol", ctx_.protocol_name()},
                     {"party", server_.view.party()},
                     {"user", user.index},
                     {"points", slice.entries.size()},
                     {"located", located}});
  }

  void finish(std::uint64_t event_id) override {
    for (const auto& [user, edits] : ctx_.forge_edits) apply_forgery(user);

    std::vector<Session> sessions;
    for (std::uint32_t i = 0; i < ctx_.n_users; ++i) {
      const UserId requester{i};
      if (logs_[i].entries.empty()) continue;
      std::vector<std::int64_t> buckets;
      for (const auto& [b, ts] : logs_[i].entries) buckets.push_back(b);
      auto overlaps = alt_timestamp_overlap(server_, requester, buckets, event_id);
      ctx_.transcript.add("user", "match-server", "timestamps", 1, buckets.size() * 8);
      if (!overlaps.empty()) sessions.push_back({requester, std::move(overlaps), {}, {}});
    }

    // Sessions only read server state, so they run concurrently; each draws
    // from its own stream to keep the output independent of scheduling.
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(sessions.size());
    auto work = [&] {
      for (std::size_t k = next++; k < sessions.size(); k = next++) {
        try {
          run_session(sessions[k]);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      }
    };
    const std::size_t n_threads =
        std::min<std::size_t>(sessions.size(), std::max(1U, std::thread::hardware_concurrency()));
    std::vector<std::thread> pool;
    for (std::size_t k = 1; k < n_threads; ++k) pool.emplace_back(work);
    work();
    for (std::thread& th : pool) th.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }

    const double close_m = ctx_.config.thresholds.close_distance_m;
    for (const Session& s : sessions) {
      for (const auto& [bucket, n] : s.encrypted) {
        ctx_.transcript.add("user", "match-server", "encrypted_ids", n, n * HECiphertext::kWireBytes);
      }
      std::map<UserId, std::map<std::int64_t, AltBucketEstimate>> estimates;
      for (const CellBlock& c : s.blocks) {
        ctx_.transcript.add("match-server", "user", "matrix", 1, c.matrix_bytes);
        cells_ += c.cells;
        if (c.disclosed.empty()) continue;
        alt_receive_disclosure(server_, s.requester, c.reporter, c.bucket, c.disclosed, event_id);
        ctx_.transcript.add("user", "match-server", "disclosure", 1, c.disclosed.size() * kTupleBytes);
        if (c.estimate.bound_m) estimates[c.reporter][c.bucket] = c.estimate;
      }
      for (const auto& [reporter, per_bucket] : estimates) {
        const AltVerdict v = alt_verdict(per_bucket, close_m, params_.bucket_s, ctx_.policy.min_duration_s);
        if (!v.verdict || !*v.verdict) continue;
        ctx_.alert(reporter, s.requester,
                   static_cast<double>(v.close_s) / static_cast<double>(ctx_.policy.min_duration_s), v.origin);
      }
    }
    ctx_.log.append({{"type", "matching_cost"}, {"protocol", ctx_.protocol_name()}, {"cells", cells_}});
  }

  std::vector<const PartyView*> views() const override { return {&server_.view}; }

 private:
  struct CellBlock {
    UserId reporter;
    std::int64_t bucket = 0;
    std::uint64_t matrix_bytes = 0;
    std::size_t cells = 0;
    std::vector<ObservationTuple> disclosed;
    AltBucketEstimate estimate;
  };
  struct Session {
    UserId requester;
    std::vector<std::pair<UserId, std::int64_t>> overlaps;
    std::map<std::int64_t, std::size_t> encrypted;  // bucket -> ciphertexts sent
    std::vector<CellBlock> blocks;
  };

  void run_session(Session& s) const {
    RandomStream rand = he_rand_.fork("session:" + std::to_string(s.requester.index));
    const HEKeyPair kp = he_keygen(rand, params_.message_bits);
    const BucketedLog& own = logs_[s.requester.index];
    std::map<std::int64_t, std::vector<HECiphertext>> encrypted;
    for (const auto& [reporter, bucket] : s.overlaps) {
      const auto& mine = own.entries.at(bucket);
      auto enc = encrypted.find(bucket);
      if (enc == encrypted.end()) {
        std::vector<HECiphertext> cs;
        for (const ObservationTuple& t : mine) cs.push_back(he_enc(kp.pk, t.m, rand));
        s.encrypted[bucket] = cs.size();
        enc = encrypted.emplace(bucket, std::move(cs)).first;
      }
      const auto& theirs = server_.infected_logs.at(reporter).entries.at(bucket);
      const AltMatrix matrix = alt_build_matrix(kp.pk, enc->second, theirs, rand);
      CellBlock block{reporter, bucket, matrix.wire_bytes(), matrix.cells.size(), {}, {}};
      block.disclosed = alt_client_match(kp.sk, matrix, mine);
      if (!block.disclosed.empty()) block.estimate = alt_distance(ctx_.config.world.radio, block.disclosed, theirs);
      s.blocks.push_back(std::move(block));
    }
  }

  void apply_forgery(UserId user) {
    auto it = ctx_.forge_edits.find(user);
    if (it == ctx_.forge_edits.end() || forged_.contains(user)) return;
    forged_.insert(user);
    using Entry = std::pair<std::int64_t, ObservationTuple>;
    std::vector<Entry> flat;
    for (const auto& [b, ts] : logs_[user.index].entries) {
      for (const ObservationTuple& t : ts) {
        if (!t.own) flat.push_back({b, t});
      }
    }
    const std::int64_t last_bucket = (ctx_.horizon_s - 1) / params_.bucket_s;
    const std::uint64_t mask = params_.message_bits >= 64 ? ~0ULL : ((1ULL << params_.message_bits) - 1);
    std::function<Entry()> make_random = [&] {
      return Entry{last_bucket, {he_rand_.next_u64() & mask, SignalStrength{kForgedRssiDbm}, DeviceType::kPhone, false,
                                 Origin::kForged}};
    };
    std::map<const ForgeEdit*, std::size_t> step;
    std::function<std::optional<Entry>(const ForgeEdit&)> make_replay = [&](const ForgeEdit& e) -> std::optional<Entry> {
      const Seconds at = e.at_s + static_cast<Seconds>(step[&e]++) * ctx_.tick_s;
      const auto payload = ctx_.replay_payload(e.peer, at);
      if (!payload || payload->size() != 8) return std::nullopt;
      return Entry{at / params_.bucket_s,
                   {read_u64_le(*payload), SignalStrength{kForgedRssiDbm}, DeviceType::kPhone, false, Origin::kForged}};
    };
    const ForgeOutcome out = atk_forge_store<Entry>(flat, it->second, make_random, make_replay);
    BucketedLog rebuilt;
    std::map<std::int64_t, std::vector<ObservationTuple>> grouped;
    for (const auto& [b, t] : flat) grouped[b].push_back(t);
    for (const auto& [b, ts] : grouped) alt_sense(rebuilt, m_[user.index], DeviceType::kPhone, b, ts);
    logs_[user.index] = std::move(rebuilt);
    // Plain tuples carry no authentication, so every injection stands.
    ctx_.forgery(user, it->second, out, out.injected, 0);
  }

  AltuwaiyanParams params_;
  RandomStream beacon_rand_;
  RandomStream he_rand_;
  std::vector<std::uint64_t> m_;
  std::vector<BucketedLog> logs_;
  std::vector<Beacon> beacons_;
  std::vector<std::uint64_t> beacon_m_;
  MatchServerState server_;
  std::set<UserId> forged_;
  std::uint64_t cells_ = 0;
};

}  // namespace

std::unique_ptr<Driver> make_altuwaiyan_driver(Context& ctx) { return std::make_unique<AltuwaiyanDriver>(ctx); }

}  // namespace tracebench::sim
