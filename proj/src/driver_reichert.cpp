#include "sim_internal.hpp"
#include "tracebench/proto_reichert.hpp"

namespace tracebench::sim {

namespace {

// t(8) || lat(8) || lon(8)
constexpr std::uint64_t kPointBytes = 24;

class ReichertDriver final : public Driver {
 public:
  explicit ReichertDriver(Context& ctx)
      : Driver(ctx), params_(ctx.config.protocol.reichert), gps_rand_(ctx.seed, "gps"), forge_rand_(ctx.seed, "gps-forge") {
    thresholds_.time_s = params_.tau_time_s;
    thresholds_.dist_m = params_.tau_dist_m;
  }

  Seconds coverage_interval_s() const override { return ctx_.config.world.interval_s; }

  void setup() override {
    points_.resize(ctx_.n_users);
    forged_points_.resize(ctx_.n_users);
  }

  // No radio payload; broadcasts stay empty so that the radio ground truth
  // and the attacks still see every device.
  std::map<UserId, Bytes> payloads(std::size_t, Seconds) override {
    std::map<UserId, Bytes> out;
    for (std::uint32_t i = 0; i < ctx_.n_users; ++i) out.emplace(UserId{i}, Bytes{});
    return out;
  }

  void sense(std::size_t tick, Seconds t, const std::vector<BroadcastEvent>&) override {
    for (const auto& [u, traj] : ctx_.trajectories) {
      GeoPoint p = traj.samples.at(tick).point;
      if (params_.gps_noise_m > 0.0) {
        const double de = gps_rand_.normal(0.0, params_.gps_noise_m);
        const double dn = gps_rand_.normal(0.0, params_.gps_noise_m);
        p = offset_meters(p, de, dn);
      }
      points_[u.index].push_back({TimeInterval{static_cast<std::int64_t>(tick), t, t + ctx_.tick_s}, p});
    }
  }

  void report(UserId user, Seconds t, Seconds window_start, std::uint64_t event_id) override {
    std::vector<GeoTimePoint> mine, genuine;
    for (const GeoTimePoint& p : uploadable(user)) {
      if (p.t.start_s >= window_start && p.t.start_s < t) mine.push_back(p);
    }
    for (const GeoTimePoint& p : points_[user.index]) {
      if (p.t.start_s >= window_start && p.t.start_s < t) genuine.push_back(p);
    }
    if (mine.empty()) return;
    const MatchingJob& job = rch_ingest(ha_, user_party(user.index), mine, thresholds_, event_id);
    ctx_.transcript.add("user", "ha", "location_upload", 1, mine.size() * kPointBytes);
    ctx_.log.append({{"type", "disclosed_points"},
                     {"protocol", ctx_.protocol_name()},
                     {"party", ha_.view.party()},
                     {"user", user.index},
                     {"points", mine.size()},
                     {"located", mine.size()}});
    reporters_.push_back(user);
    genuine_jobs_.push_back(MatchingJob{job.victim, std::move(genuine), thresholds_, {}});
  }

  void finish(std::uint64_t) override {
    for (const auto& [user, edits] : ctx_.forge_edits) uploadable(user);
    CostEstimate total;
    for (std::uint32_t i = 0; i < ctx_.n_users; ++i) {
      const UserId requester{i};
      const auto& pts = uploadable(requester);
      if (pts.empty()) continue;
      for (std::size_t j = 0; j < ha_.jobs.size(); ++j) {
        if (reporters_[j] == requester) continue;
        const RchSession s = rch_match(ha_.jobs[j], pts);
        total.comparisons += s.cost.comparisons;
        total.estimated_gates += s.cost.estimated_gates;
        total.estimated_bytes += s.cost.estimated_bytes;
        ctx_.transcript.add("user", "ha", "matching", s.messages, s.bytes);
        if (!s.flag) continue;
        const bool genuine = !genuine_jobs_[j].points.empty() && rch_match(genuine_jobs_[j], points_[i]).flag;
        ctx_.alert(reporters_[j], requester, 1.0, genuine ? Origin::kGenuine : Origin::kForged);
      }
    }
    ctx_.log.append({{"type", "matching_cost"},
                     {"protocol", ctx_.protocol_name()},
                     {"comparisons", total.comparisons},
                     {"gates", total.estimated_gates},
                     {"bytes", total.estimated_bytes}});
  }

  std::vector<const PartyView*> views() const override { return {&ha_.view}; }

 private:
  // The user's points as the protocol sees them, forged once on first use.
  const std::vector<GeoTimePoint>& uploadable(UserId user) {
    auto it = ctx_.forge_edits.find(user);
    if (it == ctx_.forge_edits.end()) return points_[user.index];
    auto& forged = forged_points_[user.index];
    if (forged) return *forged;
    forged = points_[user.index];
    const Bounds& bounds = ctx_.config.world.mobility.bounds;
    std::function<GeoTimePoint()> make_random = [&] {
      const auto tick = static_cast<std::int64_t>(forge_rand_.uniform_below(static_cast<std::uint64_t>(ctx_.horizon_s / ctx_.tick_s)));
      const GeoPoint p = offset_meters(bounds.origin, forge_rand_.uniform(0, bounds.width_m), forge_rand_.uniform(0, bounds.height_m));
      return GeoTimePoint{TimeInterval{tick, tick * ctx_.tick_s, (tick + 1) * ctx_.tick_s}, p};
    };
    std::map<const ForgeEdit*, std::size_t> step;
    std::function<std::optional<GeoTimePoint>(const ForgeEdit&)> make_replay =
        [&](const ForgeEdit& e) -> std::optional<GeoTimePoint> {
      const Seconds at = e.at_s - e.at_s % ctx_.tick_s + static_cast<Seconds>(step[&e]++) * ctx_.tick_s;
      if (at >= ctx_.horizon_s) return std::nullopt;
      const std::int64_t tick = at / ctx_.tick_s;
      // The attacker copies where the peer was, as seen while following it.
      const GeoPoint p = ctx_.trajectories.at(e.peer).samples.at(static_cast<std::size_t>(tick)).point;
      return GeoTimePoint{TimeInterval{tick, at, at + ctx_.tick_s}, p};
    };
    const ForgeOutcome out = atk_forge_store<GeoTimePoint>(*forged, it->second, make_random, make_replay);
    std::stable_sort(forged->begin(), forged->end(),
                     [](const GeoTimePoint& a, const GeoTimePoint& b) { return a.t.start_s < b.t.start_s; });
    // Location fixes are self-reported; nothing authenticates them.
    ctx_.forgery(user, it->second, out, out.injected, 0);
    return *forged;
  }

  ReichertParams params_;
  RchThresholds thresholds_;
  RandomStream gps_rand_;
  RandomStream forge_rand_;
  std::vector<std::vector<GeoTimePoint>> points_;
  std::vector<std::optional<std::vector<GeoTimePoint>>> forged_points_;
  HAState ha_;
  std::vector<UserId> reporters_;
  std::vector<MatchingJob> genuine_jobs_;
};

}  // namespace

std::unique_ptr<Driver> make_reichert_driver(Context& ctx) { return std::make_unique<ReichertDriver>(ctx); }

}  // namespace tracebench::sim
