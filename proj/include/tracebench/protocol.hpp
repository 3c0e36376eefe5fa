#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "tracebench/core.hpp"
#include "tracebench/world.hpp"

namespace tracebench {

/// Shared close-contact rule: a record is close when its signal is at least
/// `close_rssi_dbm`; a contact is flagged once its close records add up to
/// `min_duration_s`.
struct RiskPolicy {
  double close_rssi_dbm = -61.0;
  Seconds min_duration_s = 900;
};

/// Threshold equivalent to `distance_m` under the noiseless radio model.
RiskPolicy policy_for_distance(const RadioModel& model, double distance_m, Seconds min_duration_s);

inline constexpr std::size_t kOriginCount = 4;

/// Close-contact duration toward one peer, split by provenance so alerts can
/// be attributed.
class Evidence {
 public:
  void add(Origin origin, Seconds close_s) { by_origin_[static_cast<std::size_t>(origin)] += close_s; }
  Seconds total() const;
  Seconds of(Origin origin) const { return by_origin_[static_cast<std::size_t>(origin)]; }
  bool flagged(const RiskPolicy& policy) const { return total() >= policy.min_duration_s; }
  /// kGenuine when genuine records alone would flag the contact, otherwise
  /// the adversarial origin contributing the most.
  Origin attribution(const RiskPolicy& policy) const;

 private:
  std::array<Seconds, kOriginCount> by_origin_{};
};

/// A protocol telling `contact` that it was near infected `reporter`.
struct Alert {
  UserId reporter;
  UserId contact;
  double score = 0.0;
  Origin origin = Origin::kGenuine;
};

/// Aggregated message accounting keyed by (from, to, kind).
class Transcript {
 public:
  struct Entry {
    std::uint64_t count = 0;
    std::uint64_t bytes = 0;
  };
  using Key = std::tuple<std::string, std::string, std::string>;

  void add(const std::string& from, const std::string& to, const std::string& kind, std::uint64_t count,
           std::uint64_t bytes);
  const std::map<Key, Entry>& entries() const { return entries_; }
  std::uint64_t total_messages() const;
  std::uint64_t total_bytes() const;

 private:
  std::map<Key, Entry> entries_;
};

}  // namespace tracebench
