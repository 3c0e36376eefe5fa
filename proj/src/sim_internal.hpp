#pragma once

// Shared between the tick pipeline and the per-protocol drivers. Not part of
// the installed interface.

#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <vector>

#include "tracebench/adversary.hpp"
#include "tracebench/config.hpp"
#include "tracebench/event_log.hpp"
#include "tracebench/party_view.hpp"
#include "tracebench/protocol.hpp"

namespace tracebench::sim {

struct Context {
  const ScenarioConfig& config;
  const TrajectoryMap& trajectories;
  EventLogWriter& log;
  std::ostream* publications = nullptr;
  RiskPolicy policy;
  std::uint64_t seed = 0;
  std::size_t n_users = 0;
  Seconds tick_s = 60;
  Seconds horizon_s = 0;

  /// Store edits per forging user, applied the first time the store is used.
  std::map<UserId, std::vector<ForgeEdit>> forge_edits;
  /// Payloads an attacker captured for replay, keyed by (peer, tick time).
  std::map<std::pair<UserId, Seconds>, Bytes> captured;
  Transcript transcript;

  std::string protocol_name() const { return to_string(config.protocol.kind); }

  std::uint64_t alert(UserId reporter, UserId contact, double score, Origin origin);
  void forgery(UserId user, const std::vector<ForgeEdit>& edits, const ForgeOutcome& outcome, std::size_t accepted,
               std::size_t rejected);
  /// Captured payload for (peer, time floored to the tick grid).
  std::optional<Bytes> replay_payload(UserId peer, Seconds t) const;
};

class Driver {
 public:
  explicit Driver(Context& ctx) : ctx_(ctx) {}
  virtual ~Driver() = default;

  virtual void setup() = 0;
  virtual void start_day(std::int64_t /*day*/) {}
  virtual std::map<UserId, Bytes> payloads(std::size_t tick, Seconds t) = 0;
  virtual void sense(std::size_t tick, Seconds t, const std::vector<BroadcastEvent>& events) = 0;
  virtual void report(UserId user, Seconds t, Seconds window_start, std::uint64_t event_id) = 0;
  virtual void finish(std::uint64_t event_id) = 0;
  virtual std::vector<const PartyView*> views() const = 0;
  /// Interval used to key encounter pairs learned by the authority.
  virtual Seconds coverage_interval_s() const = 0;

  // Attack hooks; the defaults mean "not applicable to this protocol".
  virtual std::optional<DailyKey> current_key(UserId) const { return std::nullopt; }
  virtual std::optional<std::uint64_t> key_epoch(UserId) const { return std::nullopt; }
  virtual std::size_t ids_per_day() const { return 0; }
  virtual std::optional<std::vector<UserId>> identify_targets(const AttackerState&, const std::vector<UserId>&,
                                                              UserId /*attacker*/) const {
    return std::nullopt;
  }

 protected:
  Context& ctx_;
};

std::unique_ptr<Driver> make_tracetogether_driver(Context& ctx);
std::unique_ptr<Driver> make_dp3t_driver(Context& ctx);
std::unique_ptr<Driver> make_altuwaiyan_driver(Context& ctx);
std::unique_ptr<Driver> make_reichert_driver(Context& ctx);

/// Payloads sized for each protocol, for the nonzero-length check in replay.
Bytes u64_le(std::uint64_t v);

}  // namespace tracebench::sim
