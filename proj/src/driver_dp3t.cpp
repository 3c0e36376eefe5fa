#include "sim_internal.hpp"
#include "tracebench/proto_dp3t.hpp"

namespace tracebench::sim {

namespace {

constexpr double kForgedRssiDbm = -40.0;
// opaque(16) || sk(32) || start_day(8) || end_day(8)
constexpr std::uint64_t kPublicationBytes = 64;

class DP3TDriver final : public Driver {
 public:
  explicit DP3TDriver(Context& ctx)
      : Driver(ctx),
        params_(ctx.config.protocol.dp3t),
        rand_(ctx.seed, "dp3t"),
        order_rand_(ctx.seed, "dp3t-order") {}

  Seconds coverage_interval_s() const override { return ctx_.config.world.interval_s; }

  void setup() override {
    for (std::uint32_t i = 0; i < ctx_.n_users; ++i) devices_.push_back(dp3t_device(UserId{i}, params_.ephids_per_day, rand_));
  }

  void start_day(std::int64_t day) override {
    for (DP3TDevice& d : devices_) dp3t_start_day(d, day, order_rand_);
  }

  std::map<UserId, Bytes> payloads(std::size_t, Seconds t) override {
    std::map<UserId, Bytes> out;
    for (const DP3TDevice& d : devices_) {
      const EphemeralId& id = dp3t_current_id(d, t);
      out.emplace(d.owner, Bytes(id.begin(), id.end()));
    }
    ctx_.transcript.add("user", "air", "broadcast", out.size(), out.size() * sizeof(EphemeralId));
    return out;
  }

  void sense(std::size_t, Seconds, const std::vector<BroadcastEvent>& events) override {
    for (const BroadcastEvent& ev : events) {
      for (const Hearing& h : ev.heard_by) {
        dp3t_on_hear(devices_.at(h.user.index), ev, ctx_.tick_s, ctx_.policy.close_rssi_dbm);
      }
    }
  }

  void report(UserId user, Seconds t, Seconds window_start, std::uint64_t event_id) override {
    DP3TDevice& dev = devices_.at(user.index);
    const auto pubs = dp3t_report(dev, backend_, window_start / kSecondsPerDay, t / kSecondsPerDay, rand_,
                                  params_.publish_rotated_key, event_id);
    for (const Publication& p : pubs) {
      owner_[to_hex(p.opaque)] = user;
      ctx_.transcript.add("user", "backend", "key_upload", 1, kPublicationBytes);
      ctx_.log.append({{"type", "publication"},
                       {"opaque", to_hex(p.opaque)},
                       {"start_day", p.start_day},
                       {"end_day", p.end_day ? nlohmann::json(*p.end_day) : nlohmann::json(nullptr)}});
      if (ctx_.publications) *ctx_.publications << publication_to_json(p) << '\n';
    }
  }

  void finish(std::uint64_t) override {
    const std::size_t n_pubs = backend_.published.size();
    ctx_.transcript.add("backend", "user", "publication_download", n_pubs * devices_.size(),
                        n_pubs * devices_.size() * kPublicationBytes);

    for (const auto& [user, edits] : ctx_.forge_edits) {
      DP3TDevice& dev = devices_.at(user.index);
      const ForgeOutcome out = forge(dev, edits);
      // Nothing in the protocol can tell an injected observation apart.
      ctx_.forgery(user, edits, out, out.injected, 0);
    }

    for (const DP3TDevice& dev : devices_) {
      std::map<UserId, Evidence> evidence;
      for (const Publication& pub : backend_.published) {
        const UserId reporter = owner_.at(to_hex(pub.opaque));
        if (reporter == dev.owner) continue;
        for (const DP3TMatch& m : dp3t_match(dev.store, pub, params_.match_horizon_days, params_.ephids_per_day)) {
          const DP3TObservation& obs = dev.store[m.observation];
          if (obs.aux == 1) evidence[reporter].add(obs.origin, obs.duration_s);
        }
      }
      for (const auto& [reporter, ev] : evidence) {
        if (!ev.flagged(ctx_.policy)) continue;
        ctx_.alert(reporter, dev.owner, static_cast<double>(ev.total()) / static_cast<double>(ctx_.policy.min_duration_s),
                   ev.attribution(ctx_.policy));
      }
    }
  }

  std::vector<const PartyView*> views() const override { return {&backend_.view}; }

  std::optional<DailyKey> current_key(UserId u) const override { return devices_.at(u.index).current; }
  std::optional<std::uint64_t> key_epoch(UserId u) const override { return devices_.at(u.index).epoch; }
  std::size_t ids_per_day() const override { return params_.ephids_per_day; }

  std::optional<std::vector<UserId>> identify_targets(const AttackerState& attacker, const std::vector<UserId>& targets,
                                                      UserId) const override {
    return atk_targeted_identification(attacker, targets, backend_.published, params_.match_horizon_days,
                                       params_.ephids_per_day);
  }

 private:
  ForgeOutcome forge(DP3TDevice& dev, const std::vector<ForgeEdit>& edits) {
    const std::int64_t last_coarse = coarse_time_of(ctx_.horizon_s - 1);
    std::function<DP3TObservation()> make_random = [&] {
      DP3TObservation o;
      o.ephid = rand_.array<sizeof(EphemeralId)>();
      o.proximity = SignalStrength{kForgedRssiDbm};
      o.duration_s = ctx_.tick_s;
      o.aux = 1;
      o.coarse_time = last_coarse;
      o.origin = Origin::kForged;
      return o;
    };
    std::map<const ForgeEdit*, std::size_t> step;
    std::function<std::optional<DP3TObservation>(const ForgeEdit&)> make_replay =
        [&](const ForgeEdit& e) -> std::optional<DP3TObservation> {
      const Seconds at = e.at_s + static_cast<Seconds>(step[&e]++) * ctx_.tick_s;
      const auto payload = ctx_.replay_payload(e.peer, at);
      if (!payload || payload->size() != sizeof(EphemeralId)) return std::nullopt;
      DP3TObservation o;
      std::copy(payload->begin(), payload->end(), o.ephid.begin());
      o.proximity = SignalStrength{kForgedRssiDbm};
      o.duration_s = ctx_.tick_s;
      o.aux = 1;
      o.coarse_time = coarse_time_of(at);
      o.origin = Origin::kForged;
      return o;
    };
    return atk_forge_store<DP3TObservation>(dev.store, edits, make_random, make_replay);
  }

  DP3TParams params_;
  RandomStream rand_;
  RandomStream order_rand_;
  std::vector<DP3TDevice> devices_;
  BackendState backend_;
  // Simulator-side only: which reporter produced each publication.
  std::map<std::string, UserId> owner_;
};

}  // namespace

std::unique_ptr<Driver> make_dp3t_driver(Context& ctx) { return std::make_unique<DP3TDriver>(ctx); }

}  // namespace tracebench::sim
