#include <fstream>
#include <set>

#include "doctest.h"
#include "json.hpp"
#include "tracebench/crypto.hpp"

using namespace tracebench;
using nlohmann::json;

namespace {

json load_vectors() {
  std::ifstream in(std::string(TRACEBENCH_TEST_DATA) + "/crypto_vectors.json");
  REQUIRE(in.good());
  return json::parse(in);
}

Digest digest_from_hex(const std::string& hex) {
  Digest d;
  const Bytes b = from_hex(hex);
  std::copy(b.begin(), b.end(), d.bytes.begin());
  return d;
}

}  // namespace

TEST_CASE("hash matches reference vectors and is deterministic") {
  const json v = load_vectors();
  for (const auto& c : v["sha256"]) {
    CHECK(to_hex(hash(c["input"].get<std::string>()).bytes) == c["digest"].get<std::string>());
  }
  CHECK(hash("x") == hash("x"));
}

TEST_CASE("hash has no collisions on 10^4 random distinct pairs") {
  RandomStream rng(1, "hash-collisions");
  int collisions = 0;
  for (int i = 0; i < 10000; ++i) {
    Bytes x = rng.bytes(1 + rng.uniform_below(64));
    Bytes y = x;
    y[rng.uniform_below(y.size())] ^= static_cast<std::uint8_t>(1 + rng.uniform_below(255));
    if (hash(x) == hash(y)) ++collisions;
  }
  CHECK(collisions == 0);
}

TEST_CASE("prf is deterministic and separates labels and keys") {
  RandomStream rng(2, "prf");
  for (int i = 0; i < 500; ++i) {
    const Digest k1{rng.array<32>()}, k2{rng.array<32>()};
    CHECK(prf(k1, "broadcast key") == prf(k1, "broadcast key"));
    CHECK(prf(k1, "broadcast key") != prf(k1, "other"));
    CHECK(prf(k1, "broadcast key") != prf(k2, "broadcast key"));
  }
}

TEST_CASE("prg stream properties") {
  RandomStream rng(3, "prg");
  CHECK_THROWS_AS(prg(Digest{}, 0), ArgumentError);
  std::set<Block16> seen_across;
  for (int i = 0; i < 100; ++i) {
    const Digest seed{rng.array<32>()};
    const auto one = prg(seed, 1);
    const auto two = prg(seed, 2);
    CHECK(one[0] == two[0]);
    const auto blocks = prg(seed, 24);
    std::set<Block16> distinct(blocks.begin(), blocks.end());
    CHECK(distinct.size() == 24);
    for (const auto& b : blocks) CHECK(seen_across.insert(b).second);
  }
}

TEST_CASE("prf/prg/hash chain matches the scripted DP-3T vectors") {
  const json v = load_vectors();
  Digest sk;
  for (const auto& day : v["dp3t_chain"]["days"]) {
    if (day["day"].get<int>() == 0) {
      sk = digest_from_hex(day["key"].get<std::string>());
    } else {
      sk = hash(sk.view());
    }
    CHECK(to_hex(sk.bytes) == day["key"].get<std::string>());
    const Digest seed = prf(sk, "broadcast key");
    CHECK(to_hex(seed.bytes) == day["prf"].get<std::string>());
    const auto ids = prg(seed, 96);
    for (std::size_t i = 0; i < ids.size(); ++i) CHECK(to_hex(ids[i]) == day["ephids"][i].get<std::string>());
  }
}

TEST_CASE("TempId encryption matches scripted AES-GCM vectors") {
  const json v = load_vectors();
  SymmetricKey key;
  const Bytes kb = from_hex(v["tempids"]["key"].get<std::string>());
  std::copy(kb.begin(), kb.end(), key.bytes.begin());
  for (const auto& c : v["tempids"]["cases"]) {
    const Bytes pseudo = from_hex(c["pseudonym"].get<std::string>());
    const Bytes nonce_b = from_hex(c["nonce"].get<std::string>());
    std::array<std::uint8_t, kTidNonceBytes> nonce{};
    std::copy(nonce_b.begin(), nonce_b.end(), nonce.begin());
    const TimeInterval iv{c["index"].get<std::int64_t>(), c["start_s"].get<Seconds>(), c["end_s"].get<Seconds>()};
    const TempId tid = sym_encrypt_with_nonce(key, pseudo, iv, nonce);
    CHECK(to_hex(tid) == c["tid"].get<std::string>());
    const auto back = sym_decrypt(key, tid);
    REQUIRE(back.has_value());
    CHECK(back->pseudonym == pseudo);
    CHECK(back->interval == iv);
  }
}

TEST_CASE("sym_encrypt roundtrip, freshness and authentication") {
  RandomStream rng(4, "sym");
  const SymmetricKey key = random_symmetric_key(rng);
  const SymmetricKey other = random_symmetric_key(rng);
  const Bytes id = {1, 2, 3, 4};
  const TimeInterval iv{7, 6300, 7200};
  const TempId a = sym_encrypt(key, id, iv, rng);
  const TempId b = sym_encrypt(key, id, iv, rng);
  CHECK(a != b);
  REQUIRE(sym_decrypt(key, a).has_value());
  CHECK(sym_decrypt(key, a)->pseudonym == id);
  CHECK(sym_decrypt(key, a)->interval.index == 7);
  CHECK_FALSE(sym_decrypt(other, a).has_value());
  CHECK_FALSE(sym_decrypt(key, ByteView(a).first(10)).has_value());
  CHECK_THROWS_AS(sym_encrypt(key, Bytes(17, 0), iv, rng), ArgumentError);

  int accepted = 0;
  for (int i = 0; i < 2000; ++i) {
    TempId t = a;
    t[rng.uniform_below(t.size())] ^= static_cast<std::uint8_t>(1 + rng.uniform_below(255));
    if (sym_decrypt(key, t)) ++accepted;
    TempId junk{};
    rng.fill(junk);
    if (sym_decrypt(key, junk)) ++accepted;
  }
  CHECK(accepted == 0);
}

TEST_CASE("sym roundtrip over a 14-day schedule for 100 users") {
  RandomStream rng(5, "sym-schedule");
  const SymmetricKey key = random_symmetric_key(rng);
  const Schedule schedule = make_schedule(14 * kSecondsPerDay, 900);
  int failures = 0;
  for (std::uint32_t u = 0; u < 100; ++u) {
    const Bytes pseudo = rng.bytes(16);
    for (const auto& iv : schedule) {
      const auto back = sym_decrypt(key, sym_encrypt(key, pseudo, iv, rng));
      if (!back || back->pseudonym != pseudo || back->interval != iv) ++failures;
    }
  }
  CHECK(failures == 0);
}

TEST_CASE("homomorphic zero test") {
  RandomStream rng(6, "he");
  const HEKeyPair kp = he_keygen(rng);

  SUBCASE("equal plaintexts test zero, unequal do not") {
    for (int i = 0; i < 200; ++i) {
      const std::uint64_t m = rng.next_u64();
      std::uint64_t m2 = rng.next_u64();
      if (m2 == m) ++m2;
      const HECiphertext c = he_enc(kp.pk, m, rng);
      CHECK(he_is_zero(kp.sk, he_randomize(kp.pk, he_sub_plain(kp.pk, c, m), rng)));
      CHECK_FALSE(he_is_zero(kp.sk, he_randomize(kp.pk, he_sub_plain(kp.pk, c, m2), rng)));
    }
  }

  SUBCASE("randomizing twice keeps the verdict") {
    const HECiphertext c = he_enc(kp.pk, 99, rng);
    const auto zero = he_sub_plain(kp.pk, c, 99);
    const auto nonzero = he_sub_plain(kp.pk, c, 98);
    CHECK(he_is_zero(kp.sk, he_randomize(kp.pk, he_randomize(kp.pk, zero, rng), rng)));
    CHECK_FALSE(he_is_zero(kp.sk, he_randomize(kp.pk, he_randomize(kp.pk, nonzero, rng), rng)));
  }

  SUBCASE("wire encoding roundtrips") {
    const HECiphertext c = he_randomize(kp.pk, he_sub_plain(kp.pk, he_enc(kp.pk, 5, rng), 5), rng);
    const Bytes wire = c.to_bytes();
    CHECK(wire.size() == HECiphertext::kWireBytes);
    CHECK(he_is_zero(kp.sk, HECiphertext::from_bytes(wire)));
    Bytes bad = wire;
    bad[0] = 0x7f;
    CHECK_THROWS_AS(HECiphertext::from_bytes(bad), ArgumentError);
  }

  SUBCASE("mismatched key pair is a decryption failure") {
    RandomStream other_rng(7, "he-other");
    const HEKeyPair other = he_keygen(other_rng);
    const HECiphertext c = he_enc(kp.pk, 1, rng);
    CHECK_THROWS_AS(he_is_zero(other.sk, c), DecryptionError);
  }
}

TEST_CASE("homomorphic zero test agrees with equality on a 16-bit message space") {
  RandomStream rng(8, "he16");
  const HEKeyPair kp = he_keygen(rng, 16);
  CHECK_THROWS_AS(he_enc(kp.pk, 1u << 16, rng), ArgumentError);
  CHECK_THROWS_AS(he_sub_plain(kp.pk, he_enc(kp.pk, 1, rng), 70000), ArgumentError);
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t m = rng.uniform_below(1u << 16);
    // Half the pairs equal so both verdicts are exercised.
    const std::uint64_t m2 = (i % 2 == 0) ? m : rng.uniform_below(1u << 16);
    const bool zero = he_is_zero(kp.sk, he_randomize(kp.pk, he_sub_plain(kp.pk, he_enc(kp.pk, m, rng), m2), rng));
    if (zero != (m == m2)) ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("he_keygen is deterministic under a seed") {
  RandomStream a(9, "kg"), b(9, "kg");
  CHECK(he_keygen(a).pk.to_bytes() == he_keygen(b).pk.to_bytes());
}

TEST_CASE("hashed_identifier truncates into the message space") {
  const Bytes id = {'d', 'e', 'v'};
  const Digest d = hash(id);
  std::uint64_t expected = 0;
  for (int i = 0; i < 8; ++i) expected = expected << 8 | d.bytes[i];
  CHECK(hashed_identifier(id) == expected);
  CHECK(hashed_identifier(id, 16) == (expected & 0xffff));
}
