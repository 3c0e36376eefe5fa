#include "tracebench/protocol.hpp"

namespace tracebench {

RiskPolicy policy_for_distance(const RadioModel& model, double distance_m, Seconds min_duration_s) {
  if (!(distance_m > 0.0)) throw ConfigError("risk distance must be positive");
  if (min_duration_s <= 0) throw ConfigError("risk min_duration_s must be positive");
  return {noiseless_rssi(model, distance_m), min_duration_s};
}

Seconds Evidence::total() const {
  Seconds sum = 0;
  for (Seconds s : by_origin_) sum += s;
  return sum;
}

Origin Evidence::attribution(const RiskPolicy& policy) const {
  if (of(Origin::kGenuine) >= policy.min_duration_s) return Origin::kGenuine;
  Origin best = Origin::kGenuine;
  Seconds best_s = 0;
  for (std::size_t i = 1; i < kOriginCount; ++i) {
    if (by_origin_[i] > best_s) {
      best_s = by_origin_[i];
      best = static_cast<Origin>(i);
    }
  }
  return best;
}

void Transcript::add(const std::string& from, const std::string& to, const std::string& kind, std::uint64_t count,
                     std::uint64_t bytes) {
  if (count == 0 && bytes == 0) return;
  auto& e = entries_[{from, to, kind}];
  e.count += count;
  e.bytes += bytes;
}

std::uint64_t Transcript::total_messages() const {
  std::uint64_t n = 0;
  for (const auto& [k, e] : entries_) n += e.count;
  return n;
}

std::uint64_t Transcript::total_bytes() const {
  std::uint64_t n = 0;
  for (const auto& [k, e] : entries_) n += e.bytes;
  return n;
}

}  // namespace tracebench
