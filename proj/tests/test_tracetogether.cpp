#include <map>
#include <set>

#include "doctest.h"
#include "tracebench/proto_tracetogether.hpp"

using namespace tracebench;

namespace {

struct TTWorld {
  MoHState moh;
  std::vector<TTDeviceState> devices;
  std::vector<BroadcastEvent> events;  // every genuine event of the run
  TrajectoryMap trajs;
  Seconds tick = 60;
};

// Eight walkers in a 40 m square for three hours, every tick broadcasting
// the current TID.
TTWorld run_small_world(std::uint64_t seed) {
  TTWorld w;
  const Seconds horizon = 3 * 3600;
  MobilityConfig mob;
  mob.model = MobilityModel::kRandomWaypoint;
  mob.bounds.width_m = 40;
  mob.bounds.height_m = 40;
  w.trajs = generate_trajectories(seed, 8, horizon, w.tick, mob);
  RadioModel radio;
  RandomStream rand(seed, "tt-world");
  const Schedule schedule = make_schedule(horizon, 900);
  w.moh = tt_init(schedule, rand);
  for (const auto& [u, t] : w.trajs) {
    TTDeviceState d;
    d.owner = u;
    d.phone = phone_for(u);
    d.pseudonym = tt_register(w.moh, d.phone, rand);
    for (const auto& iv : schedule) d.tids[iv.index] = tt_issue_tid(w.moh, d.pseudonym, iv, rand);
    w.devices.push_back(d);
  }
  const std::size_t ticks = static_cast<std::size_t>(horizon / w.tick);
  for (std::size_t k = 0; k < ticks; ++k) {
    const Seconds now = static_cast<Seconds>(k) * w.tick;
    const TimeInterval& iv = interval_of(now, schedule);
    std::map<UserId, Bytes> payloads;
    for (const auto& d : w.devices) {
      const TempId& tid = d.tids.at(iv.index);
      payloads[d.owner] = Bytes(tid.begin(), tid.end());
    }
    for (auto& ev : tick_broadcasts(w.trajs, k, payloads, radio, rand)) {
      for (auto& d : w.devices) tt_on_hear(d, ev, iv);
      w.events.push_back(std::move(ev));
    }
  }
  return w;
}

TTTracePolicy default_policy() {
  TTTracePolicy p;
  p.risk = policy_for_distance(RadioModel{}, 2.0, 900);
  p.record_duration_s = 60;
  return p;
}

}  // namespace

TEST_CASE("phone numbers map back to users") {
  for (std::uint32_t i : {0u, 7u, 12345678u}) CHECK(user_for_phone(phone_for(UserId{i})) == UserId{i});
  CHECK_FALSE(user_for_phone("+44123").has_value());
  CHECK_FALSE(user_for_phone("+65abcdefgh").has_value());
}

TEST_CASE("registry is a bijection") {
  RandomStream rand(1, "tt-register");
  MoHState moh = tt_init(make_schedule(86400, 900), rand);
  const Bytes p = tt_register(moh, "+6500000001", rand);
  CHECK(tt_lookup(moh, p) == PhoneNumber("+6500000001"));
  CHECK(tt_register(moh, "+6500000002", rand) != p);
  CHECK_THROWS_AS(tt_register(moh, "+6500000001", rand), AlreadyRegisteredError);
  CHECK_FALSE(tt_lookup(moh, Bytes(16, 0)).has_value());
}

TEST_CASE("100 registrations give 100 distinct pseudonyms") {
  RandomStream rand(2, "tt-register-100");
  MoHState moh = tt_init(make_schedule(86400, 900), rand);
  std::set<Bytes> seen;
  for (std::uint32_t i = 0; i < 100; ++i) seen.insert(tt_register(moh, phone_for(UserId{i}), rand));
  CHECK(seen.size() == 100);
  CHECK(moh.phone_to_pseudonym.size() == 100);
  CHECK(moh.pseudonym_to_phone.size() == 100);
  CHECK(moh.view.count(FactKind::kIdentityLink) == 100);
}

TEST_CASE("issued TIDs decrypt to their pseudonym and interval") {
  RandomStream rand(3, "tt-issue");
  const Schedule schedule = make_schedule(86400, 900);
  MoHState moh = tt_init(schedule, rand);
  const Bytes a = tt_register(moh, phone_for(UserId{1}), rand);
  const Bytes b = tt_register(moh, phone_for(UserId{2}), rand);
  std::set<TempId> tids;
  for (const auto& iv : schedule) {
    const TempId t = tt_issue_tid(moh, a, iv, rand);
    const auto plain = sym_decrypt(moh.key, t);
    REQUIRE(plain.has_value());
    CHECK(plain->pseudonym == a);
    CHECK(plain->interval == iv);
    tids.insert(t);
  }
  CHECK(tids.size() == schedule.size());
  const auto pa = sym_decrypt(moh.key, tt_issue_tid(moh, a, schedule[5], rand));
  const auto pb = sym_decrypt(moh.key, tt_issue_tid(moh, b, schedule[5], rand));
  CHECK(pa->pseudonym != pb->pseudonym);
  CHECK_THROWS_AS(tt_issue_tid(moh, Bytes(16, 1), schedule[0], rand), ProtocolError);
  CHECK_THROWS_AS(tt_issue_tid(moh, a, TimeInterval{0, 0, 1800}, rand), RangeError);
  CHECK_THROWS_AS(tt_issue_tid(moh, a, TimeInterval{999, 86400, 87300}, rand), RangeError);
}

TEST_CASE("tt_on_hear appends one record per hearing") {
  TTDeviceState d;
  d.owner = UserId{1};
  d.tids[0] = TempId{};
  const TimeInterval iv{0, 0, 900};
  BroadcastEvent lonely{UserId{2}, Bytes(kTempIdBytes, 7), 0, {}, Origin::kGenuine};
  tt_on_hear(d, lonely, iv);
  CHECK(d.store.empty());

  BroadcastEvent heard{UserId{2}, Bytes(kTempIdBytes, 7), 0, {{UserId{1}, SignalStrength{-50}}}, Origin::kRelay};
  tt_on_hear(d, heard, iv);
  REQUIRE(d.store.size() == 1);
  CHECK(d.store[0].peer_tid[0] == 7);
  CHECK(d.store[0].sigstren.rssi_dbm == -50);
  CHECK(d.store[0].origin == Origin::kRelay);

  BroadcastEvent junk{UserId{2}, Bytes(5, 1), 0, {{UserId{1}, SignalStrength{-50}}}, Origin::kGenuine};
  tt_on_hear(d, junk, iv);
  CHECK(d.store.size() == 1);
  CHECK_THROWS_AS(tt_on_hear(d, heard, TimeInterval{1, 900, 1800}), ProtocolError);
}

TEST_CASE("store sizes equal the heard-broadcast recount and records reference real peers") {
  const TTWorld w = run_small_world(11);
  std::map<UserId, std::size_t> heard;
  for (const auto& ev : w.events) {
    for (const auto& h : ev.heard_by) ++heard[h.user];
  }
  std::size_t total = 0;
  for (const auto& d : w.devices) {
    CHECK(d.store.size() == heard[d.owner]);
    total += d.store.size();
  }
  CHECK(total > 0);
}

TEST_CASE("upload encoding roundtrips bit-exactly") {
  const TTWorld w = run_small_world(12);
  CHECK(tt_report(TTDeviceState{}).empty());
  CHECK(decode_upload(encode_upload({})).empty());
  for (const auto& d : w.devices) {
    const TTUpload up = tt_report(d);
    CHECK(up.size() == d.store.size());
    const Bytes enc = encode_upload(up);
    const TTUpload back = decode_upload(enc);
    CHECK(back == up);
    CHECK(encode_upload(back) == enc);
  }
  Bytes enc = encode_upload(tt_report(w.devices[0]));
  REQUIRE(enc.size() > 10);
  CHECK_THROWS_AS(decode_upload(Bytes(enc.begin(), enc.end() - 1)), ProtocolError);
  enc.push_back(0);
  CHECK_THROWS_AS(decode_upload(enc), ProtocolError);
  CHECK_THROWS_AS(decode_upload(Bytes{1, 2}), ProtocolError);
}

TEST_CASE("tt_trace returns exactly the referenced peer") {
  RandomStream rand(4, "tt-trace");
  const Schedule schedule = make_schedule(86400, 900);
  MoHState moh = tt_init(schedule, rand);
  const Bytes a = tt_register(moh, phone_for(UserId{1}), rand);
  const Bytes b = tt_register(moh, phone_for(UserId{2}), rand);
  tt_register(moh, phone_for(UserId{3}), rand);

  TTUpload up;
  for (int k = 0; k < 15; ++k) {
    TTRecord r;
    r.own_tid = tt_issue_tid(moh, a, schedule[4], rand);
    r.peer_tid = tt_issue_tid(moh, b, schedule[4], rand);
    r.sigstren = SignalStrength{-50};
    r.interval = 4;
    up.push_back(r);
  }
  const TTTraceResult res = tt_trace(moh, phone_for(UserId{1}), up, default_policy());
  REQUIRE(res.contacts.size() == 1);
  CHECK(res.contacts[0].phone == phone_for(UserId{2}));
  CHECK(res.contacts[0].flagged);
  CHECK(res.contacts[0].risk_score == doctest::Approx(1.0));
  CHECK(res.anomalies == 0);
  CHECK(moh.view.knows(FactKind::kEncounterPair, pair_subject(1, 2, 4)));

  // One record short of the minimum duration.
  up.pop_back();
  CHECK_FALSE(tt_trace(moh, phone_for(UserId{1}), up, default_policy()).contacts[0].flagged);

  // Weak records are decrypted but not close.
  for (auto& r : up) r.sigstren = SignalStrength{-80};
  const auto weak = tt_trace(moh, phone_for(UserId{1}), up, default_policy());
  CHECK(weak.contacts.size() == 1);
  CHECK(weak.contacts[0].risk_score == 0.0);

  // Records before the window do not count.
  TTTracePolicy late = default_policy();
  late.first_interval = 5;
  for (auto& r : up) r.sigstren = SignalStrength{-50};
  up.push_back(up.back());
  CHECK_FALSE(tt_trace(moh, phone_for(UserId{1}), up, late).contacts[0].flagged);
}

TEST_CASE("forged and stale TIDs are counted, never traced") {
  RandomStream rand(5, "tt-forge");
  const Schedule schedule = make_schedule(86400, 900);
  MoHState moh = tt_init(schedule, rand);
  const Bytes a = tt_register(moh, phone_for(UserId{1}), rand);
  const Bytes b = tt_register(moh, phone_for(UserId{2}), rand);

  TTRecord forged;
  forged.own_tid = tt_issue_tid(moh, a, schedule[3], rand);
  forged.peer_tid = rand.array<kTempIdBytes>();
  forged.sigstren = SignalStrength{-40};
  forged.interval = 3;
  auto res = tt_trace(moh, phone_for(UserId{1}), {forged}, default_policy());
  CHECK(res.anomalies == 1);
  CHECK(res.contacts.empty());

  TTRecord stale = forged;
  stale.peer_tid = tt_issue_tid(moh, b, schedule[1], rand);
  res = tt_trace(moh, phone_for(UserId{1}), {stale}, default_policy());
  CHECK(res.stale == 1);
  CHECK(res.contacts.empty());

  TTRecord foreign = forged;
  foreign.own_tid = tt_issue_tid(moh, b, schedule[3], rand);
  foreign.peer_tid = tt_issue_tid(moh, a, schedule[3], rand);
  res = tt_trace(moh, phone_for(UserId{1}), {foreign}, default_policy());
  CHECK(res.foreign_own == 1);
  CHECK(res.contacts.empty());
}

TEST_CASE("forged records are tallied as accepted or rejected") {
  RandomStream rand(6, "tt-forge-count");
  const Schedule schedule = make_schedule(86400, 900);
  MoHState moh = tt_init(schedule, rand);
  const Bytes a = tt_register(moh, phone_for(UserId{1}), rand);
  const Bytes b = tt_register(moh, phone_for(UserId{2}), rand);

  TTRecord random;
  random.own_tid = tt_issue_tid(moh, a, schedule[3], rand);
  random.peer_tid = rand.array<kTempIdBytes>();
  random.sigstren = SignalStrength{-40};
  random.interval = 3;
  random.origin = Origin::kForged;
  TTUpload upload(15, random);
  // A replayed genuine TID of user 2, repeated for a full interval.
  TTRecord replay = random;
  replay.peer_tid = tt_issue_tid(moh, b, schedule[3], rand);
  for (int i = 0; i < 15; ++i) upload.push_back(replay);
  auto res = tt_trace(moh, phone_for(UserId{1}), upload, default_policy());
  CHECK(res.anomalies == 15);
  CHECK(res.forged_rejected == 15);
  CHECK(res.forged_accepted == 15);
  REQUIRE(res.contacts.size() == 1);
  CHECK(res.contacts[0].phone == phone_for(UserId{2}));
  CHECK(res.contacts[0].flagged);
  CHECK(res.contacts[0].origin == Origin::kForged);
}

TEST_CASE("traced phones equal the peers the reporter heard and MoH learns only reporters' pairs") {
  TTWorld w = run_small_world(13);
  const std::set<std::uint32_t> reporters{0, 3};

  // Oracle: join of the event stream.
  std::map<std::uint32_t, std::set<PhoneNumber>> heard;
  std::set<std::string> reporter_pairs;
  for (const auto& ev : w.events) {
    for (const auto& h : ev.heard_by) {
      if (!reporters.contains(h.user.index)) continue;
      heard[h.user.index].insert(phone_for(ev.sender));
      reporter_pairs.insert(
          pair_subject(h.user.index, ev.sender.index, interval_of(ev.time_s, w.moh.schedule).index));
    }
  }

  for (const auto& d : w.devices) {
    if (!reporters.contains(d.owner.index)) continue;
    const auto res = tt_trace(w.moh, d.phone, tt_report(d), default_policy());
    std::set<PhoneNumber> traced;
    for (const auto& c : res.contacts) traced.insert(c.phone);
    CHECK(traced == heard[d.owner.index]);
    CHECK(res.anomalies == 0);
    CHECK(res.stale == 0);
  }

  std::set<std::string> known;
  for (const auto& f : w.moh.view.facts()) {
    if (f.kind == FactKind::kEncounterPair) known.insert(f.subject);
  }
  CHECK(known == reporter_pairs);
}
