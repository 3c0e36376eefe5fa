#include "tracebench/proto_tracetogether.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>

#include "json.hpp"

namespace tracebench {

namespace {

constexpr std::size_t kRecordBytes = 2 * kTempIdBytes + 8 + 8;

void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(Bytes& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

}  // namespace

PhoneNumber phone_for(UserId user) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "+65%08u", user.index);
  return buf;
}

std::optional<UserId> user_for_phone(const PhoneNumber& phone) {
  if (phone.size() != 11 || phone.rfind("+65", 0) != 0) return std::nullopt;
  std::uint32_t v = 0;
  for (std::size_t i = 3; i < phone.size(); ++i) {
    if (phone[i] < '0' || phone[i] > '9') return std::nullopt;
    v = v * 10 + static_cast<std::uint32_t>(phone[i] - '0');
  }
  return UserId{v};
}

MoHState tt_init(const Schedule& schedule, RandomStream& rand) {
  MoHState moh;
  moh.key = random_symmetric_key(rand);
  moh.schedule = schedule;
  return moh;
}

Bytes tt_register(MoHState& moh, const PhoneNumber& phone, RandomStream& rand, std::uint64_t event_id) {
  if (moh.phone_to_pseudonym.contains(phone)) throw AlreadyRegisteredError("phone " + phone + " already registered");
  Bytes pseudonym;
  do {
    pseudonym = rand.bytes(kPseudonymBytes);
  } while (moh.pseudonym_to_phone.contains(pseudonym));
  moh.phone_to_pseudonym[phone] = pseudonym;
  moh.pseudonym_to_phone[pseudonym] = phone;
  if (auto u = user_for_phone(phone)) moh.view.learn(FactKind::kIdentityLink, identity_subject(u->index), event_id);
  return pseudonym;
}

std::optional<PhoneNumber> tt_lookup(const MoHState& moh, ByteView pseudonym) {
  auto it = moh.pseudonym_to_phone.find(Bytes(pseudonym.begin(), pseudonym.end()));
  if (it == moh.pseudonym_to_phone.end()) return std::nullopt;
  return it->second;
}

TempId tt_issue_tid(const MoHState& moh, ByteView pseudonym, const TimeInterval& interval, RandomStream& rand) {
  if (!tt_lookup(moh, pseudonym)) throw ProtocolError("unknown pseudonym " + to_hex(pseudonym));
  const TimeInterval& scheduled = interval_of(interval.start_s, moh.schedule);
  if (scheduled != interval) throw RangeError("interval " + std::to_string(interval.index) + " not in schedule");
  return sym_encrypt(moh.key, pseudonym, interval, rand);
}

void tt_on_hear(TTDeviceState& device, const BroadcastEvent& event, const TimeInterval& interval) {
  if (event.payload.size() != kTempIdBytes) return;
  for (const Hearing& h : event.heard_by) {
    if (h.user != device.owner) continue;
    auto own = device.tids.find(interval.index);
    if (own == device.tids.end()) {
      throw ProtocolError("device " + device.phone + " has no TID for interval " + std::to_string(interval.index));
    }
    TTRecord rec;
    rec.own_tid = own->second;
    std::copy(event.payload.begin(), event.payload.end(), rec.peer_tid.begin());
    rec.sigstren = h.rssi;
    rec.interval = interval.index;
    rec.origin = event.origin;
    device.store.push_back(rec);
  }
}

TTUpload tt_report(const TTDeviceState& device) { return device.store; }

Bytes encode_upload(const TTUpload& upload) {
  Bytes out;
  out.reserve(4 + upload.size() * (4 + kRecordBytes));
  put_u32(out, static_cast<std::uint32_t>(upload.size()));
  for (const TTRecord& r : upload) {
    put_u32(out, static_cast<std::uint32_t>(kRecordBytes));
    out.insert(out.end(), r.own_tid.begin(), r.own_tid.end());
    out.insert(out.end(), r.peer_tid.begin(), r.peer_tid.end());
    put_u64(out, std::bit_cast<std::uint64_t>(r.sigstren.rssi_dbm));
    put_u64(out, static_cast<std::uint64_t>(r.interval));
  }
  return out;
}

TTUpload decode_upload(ByteView bytes) {
  if (bytes.size() < 4) throw ProtocolError("upload shorter than its count prefix");
  const std::uint32_t n = get_u32(bytes.data());
  std::size_t pos = 4;
  TTUpload out;
  out.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (bytes.size() - pos < 4) throw ProtocolError("upload truncated at record " + std::to_string(i));
    const std::uint32_t len = get_u32(bytes.data() + pos);
    pos += 4;
    if (len != kRecordBytes) throw ProtocolError("record " + std::to_string(i) + " has bad length");
    if (bytes.size() - pos < len) throw ProtocolError("upload truncated at record " + std::to_string(i));
    const std::uint8_t* p = bytes.data() + pos;
    TTRecord r;
    std::memcpy(r.own_tid.data(), p, kTempIdBytes);
    std::memcpy(r.peer_tid.data(), p + kTempIdBytes, kTempIdBytes);
    r.sigstren.rssi_dbm = std::bit_cast<double>(get_u64(p + 2 * kTempIdBytes));
    r.interval = static_cast<std::int64_t>(get_u64(p + 2 * kTempIdBytes + 8));
    out.push_back(r);
    pos += len;
  }
  if (pos != bytes.size()) throw ProtocolError("trailing bytes after upload");
  return out;
}

std::string upload_to_json(const TTUpload& upload) {
  nlohmann::json arr = nlohmann::json::array();
  for (const TTRecord& r : upload) {
    arr.push_back({{"own_tid", to_hex(r.own_tid)},
                   {"peer_tid", to_hex(r.peer_tid)},
                   {"rssi_dbm", r.sigstren.rssi_dbm},
                   {"interval", r.interval}});
  }
  return arr.dump();
}

TTTraceResult tt_trace(MoHState& moh, const PhoneNumber& reporter, const TTUpload& upload,
                       const TTTracePolicy& policy, std::uint64_t event_id) {
  TTTraceResult result;
  const auto reporter_user = user_for_phone(reporter);
  std::map<PhoneNumber, Evidence> evidence;

  for (const TTRecord& r : upload) {
    auto own = sym_decrypt(moh.key, r.own_tid);
    const bool forged = r.origin == Origin::kForged;
    if (!own || tt_lookup(moh, own->pseudonym) != reporter) {
      ++result.foreign_own;
      result.forged_rejected += forged;
      continue;
    }
    auto peer = sym_decrypt(moh.key, r.peer_tid);
    if (!peer) {
      ++result.anomalies;
      result.forged_rejected += forged;
      continue;
    }
    if (peer->interval.index != r.interval || own->interval.index != r.interval) {
      ++result.stale;
      result.forged_rejected += forged;
      continue;
    }
    auto phone = tt_lookup(moh, peer->pseudonym);
    if (!phone || *phone == reporter) {
      ++result.anomalies;
      result.forged_rejected += forged;
      continue;
    }
    result.forged_accepted += forged;
    auto& ev = evidence[*phone];
    if (reporter_user) {
      if (auto peer_user = user_for_phone(*phone)) {
        moh.view.learn(FactKind::kEncounterPair, pair_subject(reporter_user->index, peer_user->index, r.interval),
                       event_id);
      }
    }
    if (r.interval >= policy.first_interval && r.sigstren.rssi_dbm >= policy.risk.close_rssi_dbm) {
      ev.add(r.origin, policy.record_duration_s);
    }
  }

  for (const auto& [phone, ev] : evidence) {
    TTContact c;
    c.phone = phone;
    c.risk_score = static_cast<double>(ev.total()) / static_cast<double>(policy.risk.min_duration_s);
    c.flagged = ev.flagged(policy.risk);
    c.origin = ev.attribution(policy.risk);
    result.contacts.push_back(c);
  }
  return result;
}

}  // namespace tracebench
