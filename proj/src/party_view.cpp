#include "tracebench/party_view.hpp"

#include <algorithm>

#include "tracebench/core.hpp"

namespace tracebench {

std::string to_string(FactKind kind) {
  switch (kind) {
    case FactKind::kIdentityLink:
      return "identity-link";
    case FactKind::kLocationPoint:
      return "location-point";
    case FactKind::kTimestamp:
      return "timestamp";
    case FactKind::kEncounterPair:
      return "encounter-pair";
    case FactKind::kKeyMaterial:
      return "key-material";
    case FactKind::kRiskFlag:
      return "risk-flag";
  }
  return "unknown";
}

FactKind fact_kind_from_string(const std::string& s) {
  for (auto k : {FactKind::kIdentityLink, FactKind::kLocationPoint, FactKind::kTimestamp, FactKind::kEncounterPair,
                 FactKind::kKeyMaterial, FactKind::kRiskFlag}) {
    if (to_string(k) == s) return k;
  }
  throw ArgumentError("unknown fact kind '" + s + "'");
}

bool PartyView::learn(FactKind kind, std::string subject, std::uint64_t event_id) {
  if (!index_.emplace(kind, subject).second) return false;
  facts_.push_back({kind, std::move(subject), event_id});
  return true;
}

bool PartyView::knows(FactKind kind, const std::string& subject) const { return index_.contains({kind, subject}); }

std::size_t PartyView::count(FactKind kind) const {
  return static_cast<std::size_t>(std::count_if(facts_.begin(), facts_.end(), [&](const Fact& f) { return f.kind == kind; }));
}

std::string pair_subject(std::uint32_t a, std::uint32_t b, std::int64_t interval) {
  if (a > b) std::swap(a, b);
  return "pair:" + std::to_string(a) + "-" + std::to_string(b) + "@" + std::to_string(interval);
}

std::string location_subject(const std::string& who, std::int64_t time_key) {
  return "loc:" + who + "@" + std::to_string(time_key);
}

std::string identity_subject(std::uint32_t user) { return "user:" + std::to_string(user); }

std::string user_party(std::uint32_t user) { return "user:" + std::to_string(user); }

}  // namespace tracebench
