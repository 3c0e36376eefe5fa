#include "sim_internal.hpp"
#include "tracebench/proto_tracetogether.hpp"

namespace tracebench::sim {

namespace {

constexpr double kForgedRssiDbm = -40.0;

class TraceTogetherDriver final : public Driver {
 public:
  explicit TraceTogetherDriver(Context& ctx)
      : Driver(ctx), rand_(ctx.seed, "tracetogether"), tid_s_(ctx.config.protocol.tracetogether.tid_interval_s) {}

  Seconds coverage_interval_s() const override { return tid_s_; }

  void setup() override {
    schedule_ = make_schedule(ctx_.horizon_s, tid_s_);
    moh_ = tt_init(schedule_, rand_);
    for (std::uint32_t i = 0; i < ctx_.n_users; ++i) {
      TTDeviceState d;
      d.owner = UserId{i};
      d.phone = phone_for(d.owner);
      const std::uint64_t id = ctx_.log.append({{"type", "registration"}, {"user", i}});
      d.pseudonym = tt_register(moh_, d.phone, rand_, id);
      ctx_.transcript.add("user", "moh", "register", 1, d.phone.size());
      ctx_.transcript.add("moh", "user", "pseudonym", 1, d.pseudonym.size());
      for (const TimeInterval& iv : schedule_) d.tids[iv.index] = tt_issue_tid(moh_, d.pseudonym, iv, rand_);
      ctx_.transcript.add("moh", "user", "tid", schedule_.size(), schedule_.size() * kTempIdBytes);
      devices_.push_back(std::move(d));
    }
  }

  std::map<UserId, Bytes> payloads(std::size_t, Seconds t) override {
    const std::int64_t iv = t / tid_s_;
    std::map<UserId, Bytes> out;
    for (const TTDeviceState& d : devices_) {
      const TempId& tid = d.tids.at(iv);
      out.emplace(d.owner, Bytes(tid.begin(), tid.end()));
    }
    ctx_.transcript.add("user", "air", "broadcast", out.size(), out.size() * kTempIdBytes);
    return out;
  }

  void sense(std::size_t, Seconds t, const std::vector<BroadcastEvent>& events) override {
    const TimeInterval& iv = schedule_.at(static_cast<std::size_t>(t / tid_s_));
    for (const BroadcastEvent& ev : events) {
      for (const Hearing& h : ev.heard_by) tt_on_hear(devices_.at(h.user.index), ev, iv);
    }
  }

  void report(UserId user, Seconds t, Seconds window_start, std::uint64_t event_id) override {
    TTDeviceState& dev = devices_.at(user.index);
    TTUpload upload = tt_report(dev);

    const auto edits = ctx_.forge_edits.find(user);
    std::optional<ForgeOutcome> outcome;
    if (edits != ctx_.forge_edits.end()) outcome = forge(dev, upload, edits->second, t);

    // The MoH decodes the wire form; the simulator keeps the in-memory copy
    // for its origin tags, which the wire format does not carry.
    const Bytes wire = encode_upload(upload);
    if (!(decode_upload(wire) == upload)) throw ProtocolError("upload did not survive encoding");
    ctx_.transcript.add("user", "moh", "upload", 1, wire.size());

    TTTracePolicy policy;
    policy.risk = ctx_.policy;
    policy.record_duration_s = ctx_.tick_s;
    policy.first_interval = window_start / tid_s_;
    const TTTraceResult res = tt_trace(moh_, dev.phone, upload, policy, event_id);
    for (const TTContact& c : res.contacts) {
      if (!c.flagged) continue;
      const auto contact = user_for_phone(c.phone);
      if (!contact) continue;
      ctx_.alert(user, *contact, c.risk_score, c.origin);
      ctx_.transcript.add("moh", "user", "notification", 1, 0);
      ++notifications_[*contact];
    }
    if (res.anomalies + res.stale + res.foreign_own > 0) {
      ctx_.log.append({{"type", "anomaly"},
                       {"protocol", ctx_.protocol_name()},
                       {"user", user.index},
                       {"unauthentic", res.anomalies},
                       {"stale", res.stale},
                       {"foreign_own", res.foreign_own}});
    }
    if (outcome) ctx_.forgery(user, edits->second, *outcome, res.forged_accepted, res.forged_rejected);
  }

  void finish(std::uint64_t) override {}

  std::vector<const PartyView*> views() const override { return {&moh_.view}; }

  std::optional<std::vector<UserId>> identify_targets(const AttackerState& attacker, const std::vector<UserId>& targets,
                                                      UserId node) const override {
    auto it = notifications_.find(node);
    return atk_targeted_identification_mediated(attacker, targets, it == notifications_.end() ? 0 : it->second);
  }

 private:
  ForgeOutcome forge(const TTDeviceState& dev, TTUpload& upload, const std::vector<ForgeEdit>& edits, Seconds now) {
    const std::int64_t last_iv = std::max<Seconds>(0, now - 1) / tid_s_;
    std::function<TTRecord()> make_random = [&] {
      TTRecord r;
      r.own_tid = dev.tids.at(last_iv);
      r.peer_tid = rand_.array<kTempIdBytes>();
      r.sigstren = SignalStrength{kForgedRssiDbm};
      r.interval = last_iv;
      r.origin = Origin::kForged;
      return r;
    };
    std::map<const ForgeEdit*, std::size_t> step;
    std::function<std::optional<TTRecord>(const ForgeEdit&)> make_replay = [&](const ForgeEdit& e) -> std::optional<TTRecord> {
      const Seconds at = e.at_s + static_cast<Seconds>(step[&e]++) * ctx_.tick_s;
      const auto payload = ctx_.replay_payload(e.peer, at);
      if (!payload || payload->size() != kTempIdBytes) return std::nullopt;
      TTRecord r;
      r.interval = at / tid_s_;
      r.own_tid = dev.tids.at(r.interval);
      std::copy(payload->begin(), payload->end(), r.peer_tid.begin());
      r.sigstren = SignalStrength{kForgedRssiDbm};
      r.origin = Origin::kForged;
      return r;
    };
    return atk_forge_store<TTRecord>(upload, edits, make_random, make_replay);
  }

  RandomStream rand_;
  Seconds tid_s_;
  Schedule schedule_;
  MoHState moh_;
  std::vector<TTDeviceState> devices_;
  std::map<UserId, std::size_t> notifications_;
};

}  // namespace

std::unique_ptr<Driver> make_tracetogether_driver(Context& ctx) { return std::make_unique<TraceTogetherDriver>(ctx); }

}  // namespace tracebench::sim
