#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace tracebench {

enum class FactKind { kIdentityLink, kLocationPoint, kTimestamp, kEncounterPair, kKeyMaterial, kRiskFlag };

std::string to_string(FactKind kind);
FactKind fact_kind_from_string(const std::string& s);

/// Something a party learned, with the id of the event that taught it.
struct Fact {
  FactKind kind = FactKind::kTimestamp;
  std::string subject;
  std::uint64_t event_id = 0;
};

/// Per-party ledger of learned facts. Facts are a set keyed by (kind,
/// subject); re-learning a known fact is a no-op that keeps the first
/// provenance.
class PartyView {
 public:
  PartyView() = default;
  explicit PartyView(std::string party) : party_(std::move(party)) {}

  const std::string& party() const { return party_; }
  bool learn(FactKind kind, std::string subject, std::uint64_t event_id);
  bool knows(FactKind kind, const std::string& subject) const;
  std::size_t count(FactKind kind) const;
  std::size_t size() const { return facts_.size(); }
  const std::vector<Fact>& facts() const { return facts_; }

 private:
  std::string party_;
  std::vector<Fact> facts_;
  std::set<std::pair<FactKind, std::string>> index_;
};

// Canonical fact subjects. Users are rendered by index so that every
// party's ledger can be compared against ground truth.
std::string pair_subject(std::uint32_t a, std::uint32_t b, std::int64_t interval);
std::string location_subject(const std::string& who, std::int64_t time_key);
std::string identity_subject(std::uint32_t user);
std::string user_party(std::uint32_t user);

}  // namespace tracebench
