#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tracebench/crypto.hpp"
#include "tracebench/party_view.hpp"
#include "tracebench/protocol.hpp"
#include "tracebench/world.hpp"

namespace tracebench {

using PhoneNumber = std::string;

/// Deterministic phone number of a simulated user, and its inverse.
PhoneNumber phone_for(UserId user);
std::optional<UserId> user_for_phone(const PhoneNumber& phone);

struct AlreadyRegisteredError : ProtocolError {
  using ProtocolError::ProtocolError;
};

inline constexpr std::size_t kPseudonymBytes = 16;

struct MoHState {
  SymmetricKey key;
  std::map<PhoneNumber, Bytes> phone_to_pseudonym;
  std::map<Bytes, PhoneNumber> pseudonym_to_phone;
  Schedule schedule;
  PartyView view{"moh"};
};

MoHState tt_init(const Schedule& schedule, RandomStream& rand);

/// Throws AlreadyRegisteredError for a phone number seen before.
Bytes tt_register(MoHState& moh, const PhoneNumber& phone, RandomStream& rand, std::uint64_t event_id = 0);
std::optional<PhoneNumber> tt_lookup(const MoHState& moh, ByteView pseudonym);

/// Throws ProtocolError for an unknown pseudonym and RangeError for an
/// interval that is not part of the schedule.
TempId tt_issue_tid(const MoHState& moh, ByteView pseudonym, const TimeInterval& interval, RandomStream& rand);

struct TTRecord {
  TempId own_tid{};
  TempId peer_tid{};
  SignalStrength sigstren;
  std::int64_t interval = 0;
  // Simulator-side provenance; never serialized and never read by the MoH.
  Origin origin = Origin::kGenuine;

  bool operator==(const TTRecord& o) const {
    return own_tid == o.own_tid && peer_tid == o.peer_tid && sigstren == o.sigstren && interval == o.interval;
  }
};

struct TTDeviceState {
  UserId owner;
  PhoneNumber phone;
  Bytes pseudonym;
  std::map<std::int64_t, TempId> tids;
  std::vector<TTRecord> store;
};

/// Appends one record for every hearing of `event` by the device owner.
/// Throws ProtocolError when the device holds no TID for `interval`.
/// Payloads that are not TID-sized are ignored.
void tt_on_hear(TTDeviceState& device, const BroadcastEvent& event, const TimeInterval& interval);

using TTUpload = std::vector<TTRecord>;

TTUpload tt_report(const TTDeviceState& device);

/// u32 record count, then per record a u32 length prefix followed by
/// own_tid || peer_tid || rssi (IEEE-754 double) || interval, little-endian.
Bytes encode_upload(const TTUpload& upload);
/// Throws ProtocolError on malformed input.
TTUpload decode_upload(ByteView bytes);
std::string upload_to_json(const TTUpload& upload);

struct TTTracePolicy {
  RiskPolicy risk;
  /// Airtime represented by one stored record.
  Seconds record_duration_s = 60;
  /// Records before this interval are decrypted but do not count toward risk.
  std::int64_t first_interval = 0;
};

struct TTContact {
  PhoneNumber phone;
  double risk_score = 0.0;
  bool flagged = false;
  Origin origin = Origin::kGenuine;
};

struct TTTraceResult {
  std::vector<TTContact> contacts;  // sorted by phone
  /// Records with a peer TID that failed authentication.
  std::size_t anomalies = 0;
  /// Authentic peer TIDs replayed outside their own interval.
  std::size_t stale = 0;
  /// Records whose own TID does not belong to the reporter.
  std::size_t foreign_own = 0;
  /// Simulator-side counts over records tagged Origin::kForged.
  std::size_t forged_accepted = 0;
  std::size_t forged_rejected = 0;
};

/// Decrypts every peer TID of a confirmed user's upload and maps it to a
/// phone number. risk_score is close airtime over min_duration_s.
TTTraceResult tt_trace(MoHState& moh, const PhoneNumber& reporter, const TTUpload& upload,
                       const TTTracePolicy& policy, std::uint64_t event_id = 0);

}  // namespace tracebench
