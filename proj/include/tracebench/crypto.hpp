#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tracebench/core.hpp"
#include "tracebench/random.hpp"

namespace tracebench {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

std::string to_hex(ByteView bytes);
Bytes from_hex(std::string_view hex);

struct Digest {
  std::array<std::uint8_t, 32> bytes{};
  auto operator<=>(const Digest&) const = default;
  ByteView view() const { return bytes; }
};

struct SymmetricKey {
  std::array<std::uint8_t, 32> bytes{};
  bool operator==(const SymmetricKey&) const = default;
};

using Block16 = std::array<std::uint8_t, 16>;

/// SHA-256.
Digest hash(ByteView input);
inline Digest hash(std::string_view input) { return hash(as_bytes(input)); }

/// HMAC-SHA256 keyed by `key`.
Digest prf(const Digest& key, ByteView label);
inline Digest prf(const Digest& key, std::string_view label) { return prf(key, as_bytes(label)); }

/// AES-256-CTR keystream under `seed` with an all-zero initial counter block,
/// cut into n 16-octet blocks. Throws ArgumentError for n == 0.
std::vector<Block16> prg(const Digest& seed, std::size_t n);

SymmetricKey random_symmetric_key(RandomStream& rand);

// ---------------------------------------------------------------------------
// TempId authenticated encryption (AES-256-GCM).
//
// Wire layout: nonce(12) || ciphertext(41) || tag(16) = 69 octets. The
// plaintext is len(1) || pseudonym padded to 16 || interval index, start,
// end as little-endian 64-bit integers.

inline constexpr std::size_t kPseudonymMaxBytes = 16;
inline constexpr std::size_t kTidNonceBytes = 12;
inline constexpr std::size_t kTidTagBytes = 16;
inline constexpr std::size_t kTidPlaintextBytes = 1 + kPseudonymMaxBytes + 24;
inline constexpr std::size_t kTempIdBytes = kTidNonceBytes + kTidPlaintextBytes + kTidTagBytes;

using TempId = std::array<std::uint8_t, kTempIdBytes>;

struct TidContents {
  Bytes pseudonym;
  TimeInterval interval;
  bool operator==(const TidContents&) const = default;
};

TempId sym_encrypt(const SymmetricKey& key, ByteView pseudonym, const TimeInterval& interval, RandomStream& rand);
TempId sym_encrypt_with_nonce(const SymmetricKey& key, ByteView pseudonym, const TimeInterval& interval,
                              const std::array<std::uint8_t, kTidNonceBytes>& nonce);
/// std::nullopt on authentication failure (wrong key, tampering, garbage).
std::optional<TidContents> sym_decrypt(const SymmetricKey& key, ByteView tid);

// ---------------------------------------------------------------------------
// Additively homomorphic encryption with zero-testing.
//
// Exponential ElGamal over NIST P-256: Enc(m) = (rG, mG + rP). Subtracting a
// plaintext and scaling both components by a fresh scalar keeps an encryption
// of zero an encryption of zero, and turns anything else into an encryption of
// an unpredictable value. Decryption is a zero test: C2 == sk * C1.

inline constexpr unsigned kDefaultMessageBits = 64;

struct DecryptionError : ProtocolError {
  using ProtocolError::ProtocolError;
};

namespace detail {
struct EcPointDeleter {
  void operator()(void* p) const;
};
struct BignumDeleter {
  void operator()(void* p) const;
};
}  // namespace detail

class HEPublicKey;
class HESecretKey;

class HECiphertext {
 public:
  static constexpr std::uint8_t kSchemeTag = 0x01;
  /// tag(1) || key fingerprint(8) || C1(33) || C2(33), points compressed.
  static constexpr std::size_t kWireBytes = 1 + 8 + 33 + 33;

  HECiphertext();
  HECiphertext(const HECiphertext& other);
  HECiphertext& operator=(const HECiphertext& other);
  HECiphertext(HECiphertext&&) noexcept = default;
  HECiphertext& operator=(HECiphertext&&) noexcept = default;
  ~HECiphertext();

  std::uint8_t scheme_tag() const { return kSchemeTag; }
  std::uint64_t key_fingerprint() const { return fingerprint_; }
  Bytes to_bytes() const;
  static HECiphertext from_bytes(ByteView bytes);

 private:
  friend HECiphertext he_enc(const HEPublicKey&, std::uint64_t, RandomStream&);
  friend HECiphertext he_sub_plain(const HEPublicKey&, const HECiphertext&, std::uint64_t);
  friend HECiphertext he_randomize(const HEPublicKey&, const HECiphertext&, RandomStream&);
  friend bool he_is_zero(const HESecretKey&, const HECiphertext&);

  std::unique_ptr<void, detail::EcPointDeleter> c1_;
  std::unique_ptr<void, detail::EcPointDeleter> c2_;
  std::uint64_t fingerprint_ = 0;
};

class HEPublicKey {
 public:
  HEPublicKey();
  HEPublicKey(const HEPublicKey& other);
  HEPublicKey& operator=(const HEPublicKey& other);
  HEPublicKey(HEPublicKey&&) noexcept = default;
  HEPublicKey& operator=(HEPublicKey&&) noexcept = default;
  ~HEPublicKey();

  unsigned message_bits() const { return message_bits_; }
  std::uint64_t fingerprint() const { return fingerprint_; }
  Bytes to_bytes() const;

 private:
  friend struct HEKeyPair he_keygen(RandomStream&, unsigned);
  friend HECiphertext he_enc(const HEPublicKey&, std::uint64_t, RandomStream&);
  friend HECiphertext he_sub_plain(const HEPublicKey&, const HECiphertext&, std::uint64_t);
  friend HECiphertext he_randomize(const HEPublicKey&, const HECiphertext&, RandomStream&);

  std::unique_ptr<void, detail::EcPointDeleter> point_;
  unsigned message_bits_ = kDefaultMessageBits;
  std::uint64_t fingerprint_ = 0;
};

class HESecretKey {
 public:
  HESecretKey();
  HESecretKey(const HESecretKey& other);
  HESecretKey& operator=(const HESecretKey& other);
  HESecretKey(HESecretKey&&) noexcept = default;
  HESecretKey& operator=(HESecretKey&&) noexcept = default;
  ~HESecretKey();

  std::uint64_t fingerprint() const { return fingerprint_; }
  Bytes to_bytes() const;

 private:
  friend struct HEKeyPair he_keygen(RandomStream&, unsigned);
  friend bool he_is_zero(const HESecretKey&, const HECiphertext&);

  std::unique_ptr<void, detail::BignumDeleter> scalar_;
  std::uint64_t fingerprint_ = 0;
};

struct HEKeyPair {
  HEPublicKey pk;
  HESecretKey sk;
};

HEKeyPair he_keygen(RandomStream& rand, unsigned message_bits = kDefaultMessageBits);
/// Throws ArgumentError when m is outside [0, 2^message_bits).
HECiphertext he_enc(const HEPublicKey& pk, std::uint64_t m, RandomStream& rand);
HECiphertext he_sub_plain(const HEPublicKey& pk, const HECiphertext& c, std::uint64_t m);
HECiphertext he_randomize(const HEPublicKey& pk, const HECiphertext& c, RandomStream& rand);
/// Throws DecryptionError when `c` was produced under a different key pair.
bool he_is_zero(const HESecretKey& sk, const HECiphertext& c);

/// Hash-and-truncate of a stable device identifier into the message space:
/// the first 8 digest octets read big-endian, masked to `bits`.
std::uint64_t hashed_identifier(ByteView device_id, unsigned bits = kDefaultMessageBits);

}  // namespace tracebench
