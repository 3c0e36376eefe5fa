#include "tracebench/crypto.hpp"

#include <openssl/bn.h>
#include <openssl/ec.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/obj_mac.h>

#include <cstring>
#include <stdexcept>

namespace tracebench {

namespace {

struct CipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
};
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;

void check(int ok, const char* what) {
  if (ok != 1) throw std::runtime_error(std::string("crypto: ") + what + " failed");
}

void put_u64(std::uint8_t* out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint64_t get_u64(const std::uint8_t* in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
  return v;
}

constexpr std::string_view kTidAad = "tracebench/tid/v1";

}  // namespace

std::string to_hex(ByteView bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw ArgumentError("hex string has odd length");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw ArgumentError(std::string("invalid hex digit '") + c + "'");
  };
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  }
  return out;
}

Digest hash(ByteView input) {
  Digest d;
  unsigned int len = 0;
  check(EVP_Digest(input.data(), input.size(), d.bytes.data(), &len, EVP_sha256(), nullptr), "sha256");
  return d;
}

Digest prf(const Digest& key, ByteView label) {
  Digest d;
  unsigned int len = 0;
  if (HMAC(EVP_sha256(), key.bytes.data(), static_cast<int>(key.bytes.size()), label.data(), label.size(),
           d.bytes.data(), &len) == nullptr) {
    throw std::runtime_error("crypto: hmac-sha256 failed");
  }
  return d;
}

std::vector<Block16> prg(const Digest& seed, std::size_t n) {
  if (n == 0) throw ArgumentError("prg: block count must be at least 1");
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  const std::array<std::uint8_t, 16> iv{};
  check(EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_ctr(), nullptr, seed.bytes.data(), iv.data()), "aes-ctr init");
  std::vector<Block16> blocks(n);
  const Bytes zeros(n * 16, 0);
  int len = 0;
  check(EVP_EncryptUpdate(ctx.get(), blocks.front().data(), &len, zeros.data(), static_cast<int>(zeros.size())),
        "aes-ctr");
  return blocks;
}

SymmetricKey random_symmetric_key(RandomStream& rand) { return SymmetricKey{rand.array<32>()}; }

TempId sym_encrypt(const SymmetricKey& key, ByteView pseudonym, const TimeInterval& interval, RandomStream& rand) {
  return sym_encrypt_with_nonce(key, pseudonym, interval, rand.array<kTidNonceBytes>());
}

TempId sym_encrypt_with_nonce(const SymmetricKey& key, ByteView pseudonym, const TimeInterval& interval,
                              const std::array<std::uint8_t, kTidNonceBytes>& nonce) {
  if (pseudonym.size() > kPseudonymMaxBytes) throw ArgumentError("pseudonym longer than 16 octets");
  std::array<std::uint8_t, kTidPlaintextBytes> plain{};
  plain[0] = static_cast<std::uint8_t>(pseudonym.size());
  std::memcpy(plain.data() + 1, pseudonym.data(), pseudonym.size());
  put_u64(plain.data() + 1 + kPseudonymMaxBytes, static_cast<std::uint64_t>(interval.index));
  put_u64(plain.data() + 9 + kPseudonymMaxBytes, static_cast<std::uint64_t>(interval.start_s));
  put_u64(plain.data() + 17 + kPseudonymMaxBytes, static_cast<std::uint64_t>(interval.end_s));

  TempId tid{};
  std::memcpy(tid.data(), nonce.data(), kTidNonceBytes);
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  check(EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr), "gcm init");
  check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, kTidNonceBytes, nullptr), "gcm ivlen");
  check(EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.bytes.data(), nonce.data()), "gcm key");
  int len = 0;
  check(EVP_EncryptUpdate(ctx.get(), nullptr, &len, reinterpret_cast<const unsigned char*>(kTidAad.data()),
                          static_cast<int>(kTidAad.size())),
        "gcm aad");
  check(EVP_EncryptUpdate(ctx.get(), tid.data() + kTidNonceBytes, &len, plain.data(), static_cast<int>(plain.size())),
        "gcm encrypt");
  check(EVP_EncryptFinal_ex(ctx.get(), tid.data() + kTidNonceBytes + len, &len), "gcm final");
  check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kTidTagBytes,
                            tid.data() + kTidNonceBytes + kTidPlaintextBytes),
        "gcm tag");
  return tid;
}

std::optional<TidContents> sym_decrypt(const SymmetricKey& key, ByteView tid) {
  if (tid.size() != kTempIdBytes) return std::nullopt;
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  check(EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr), "gcm init");
  check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, kTidNonceBytes, nullptr), "gcm ivlen");
  check(EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.bytes.data(), tid.data()), "gcm key");
  int len = 0;
  check(EVP_DecryptUpdate(ctx.get(), nullptr, &len, reinterpret_cast<const unsigned char*>(kTidAad.data()),
                          static_cast<int>(kTidAad.size())),
        "gcm aad");
  std::array<std::uint8_t, kTidPlaintextBytes> plain{};
  check(EVP_DecryptUpdate(ctx.get(), plain.data(), &len, tid.data() + kTidNonceBytes,
                          static_cast<int>(kTidPlaintextBytes)),
        "gcm decrypt");
  std::array<std::uint8_t, kTidTagBytes> tag{};
  std::memcpy(tag.data(), tid.data() + kTidNonceBytes + kTidPlaintextBytes, kTidTagBytes);
  check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kTidTagBytes, tag.data()), "gcm set tag");
  if (EVP_DecryptFinal_ex(ctx.get(), plain.data() + len, &len) != 1) return std::nullopt;

  const std::size_t plen = plain[0];
  if (plen > kPseudonymMaxBytes) return std::nullopt;
  TidContents out;
  out.pseudonym.assign(plain.begin() + 1, plain.begin() + 1 + static_cast<std::ptrdiff_t>(plen));
  out.interval.index = static_cast<std::int64_t>(get_u64(plain.data() + 1 + kPseudonymMaxBytes));
  out.interval.start_s = static_cast<Seconds>(get_u64(plain.data() + 9 + kPseudonymMaxBytes));
  out.interval.end_s = static_cast<Seconds>(get_u64(plain.data() + 17 + kPseudonymMaxBytes));
  return out;
}

// ---------------------------------------------------------------------------
// Exponential ElGamal on P-256.

namespace detail {
void EcPointDeleter::operator()(void* p) const { EC_POINT_free(static_cast<EC_POINT*>(p)); }
void BignumDeleter::operator()(void* p) const { BN_clear_free(static_cast<BIGNUM*>(p)); }
}  // namespace detail

namespace {

const EC_GROUP* group() {
  static const EC_GROUP* g = [] {
    EC_GROUP* created = EC_GROUP_new_by_curve_name(NID_X9_62_prime256v1);
    if (created == nullptr) throw std::runtime_error("crypto: P-256 unavailable");
    return created;
  }();
  return g;
}

BN_CTX* bn_ctx() {
  struct Holder {
    BN_CTX* ctx = BN_CTX_new();
    ~Holder() { BN_CTX_free(ctx); }
  };
  thread_local Holder holder;
  return holder.ctx;
}

EC_POINT* pt(const std::unique_ptr<void, detail::EcPointDeleter>& p) { return static_cast<EC_POINT*>(p.get()); }
BIGNUM* bn(const std::unique_ptr<void, detail::BignumDeleter>& p) { return static_cast<BIGNUM*>(p.get()); }

std::unique_ptr<void, detail::EcPointDeleter> new_point() {
  EC_POINT* p = EC_POINT_new(group());
  if (p == nullptr) throw std::runtime_error("crypto: EC_POINT_new failed");
  return std::unique_ptr<void, detail::EcPointDeleter>(p);
}

std::unique_ptr<void, detail::EcPointDeleter> dup_point(const std::unique_ptr<void, detail::EcPointDeleter>& p) {
  if (!p) return nullptr;
  EC_POINT* d = EC_POINT_dup(pt(p), group());
  if (d == nullptr) throw std::runtime_error("crypto: EC_POINT_dup failed");
  return std::unique_ptr<void, detail::EcPointDeleter>(d);
}

struct BnDeleter {
  void operator()(BIGNUM* b) const { BN_clear_free(b); }
};
using Bn = std::unique_ptr<BIGNUM, BnDeleter>;

// Uniform nonzero scalar: 48 random octets reduced mod the group order.
Bn random_scalar(RandomStream& rand) {
  Bn s(BN_new());
  for (;;) {
    const auto raw = rand.array<48>();
    BN_bin2bn(raw.data(), static_cast<int>(raw.size()), s.get());
    check(BN_nnmod(s.get(), s.get(), EC_GROUP_get0_order(group()), bn_ctx()), "scalar reduce");
    if (!BN_is_zero(s.get())) return s;
  }
}

Bn scalar_from_u64(std::uint64_t m) {
  Bn s(BN_new());
  check(BN_set_word(s.get(), static_cast<BN_ULONG>(m)), "set word");
  return s;
}

std::array<std::uint8_t, 33> encode_point(const EC_POINT* p) {
  std::array<std::uint8_t, 33> out{};
  if (EC_POINT_is_at_infinity(group(), p) == 1) return out;  // all zeros
  const std::size_t n = EC_POINT_point2oct(group(), p, POINT_CONVERSION_COMPRESSED, out.data(), out.size(), bn_ctx());
  if (n != out.size()) throw std::runtime_error("crypto: point encoding failed");
  return out;
}

void decode_point(ByteView in, EC_POINT* p) {
  bool zero = true;
  for (auto b : in) zero = zero && b == 0;
  if (zero) {
    check(EC_POINT_set_to_infinity(group(), p), "set infinity");
    return;
  }
  if (EC_POINT_oct2point(group(), p, in.data(), in.size(), bn_ctx()) != 1) {
    throw ArgumentError("malformed homomorphic ciphertext point");
  }
}

std::uint64_t fingerprint_of(const EC_POINT* p) {
  const auto enc = encode_point(p);
  const Digest d = hash(ByteView(enc));
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = v << 8 | d.bytes[i];
  return v;
}

void check_message(const HEPublicKey& pk, std::uint64_t m) {
  if (pk.message_bits() < 64 && (m >> pk.message_bits()) != 0) {
    throw ArgumentError("plaintext " + std::to_string(m) + " outside the " + std::to_string(pk.message_bits()) +
                        "-bit message space");
  }
}

}  // namespace

HECiphertext::HECiphertext() = default;
HECiphertext::~HECiphertext() = default;
HECiphertext::HECiphertext(const HECiphertext& other)
    : c1_(dup_point(other.c1_)), c2_(dup_point(other.c2_)), fingerprint_(other.fingerprint_) {}
HECiphertext& HECiphertext::operator=(const HECiphertext& other) {
  if (this != &other) {
    c1_ = dup_point(other.c1_);
    c2_ = dup_point(other.c2_);
    fingerprint_ = other.fingerprint_;
  }
  return *this;
}

Bytes HECiphertext::to_bytes() const {
  if (!c1_ || !c2_) throw ArgumentError("empty homomorphic ciphertext");
  Bytes out;
  out.reserve(kWireBytes);
  out.push_back(kSchemeTag);
  for (int i = 7; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(fingerprint_ >> (8 * i)));
  const auto a = encode_point(pt(c1_));
  const auto b = encode_point(pt(c2_));
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

HECiphertext HECiphertext::from_bytes(ByteView bytes) {
  if (bytes.size() != kWireBytes || bytes[0] != kSchemeTag) throw ArgumentError("malformed homomorphic ciphertext");
  HECiphertext c;
  for (int i = 1; i <= 8; ++i) c.fingerprint_ = c.fingerprint_ << 8 | bytes[i];
  c.c1_ = new_point();
  c.c2_ = new_point();
  decode_point(bytes.subspan(9, 33), pt(c.c1_));
  decode_point(bytes.subspan(42, 33), pt(c.c2_));
  return c;
}

HEPublicKey::HEPublicKey() = default;
HEPublicKey::~HEPublicKey() = default;
HEPublicKey::HEPublicKey(const HEPublicKey& other)
    : point_(dup_point(other.point_)), message_bits_(other.message_bits_), fingerprint_(other.fingerprint_) {}
HEPublicKey& HEPublicKey::operator=(const HEPublicKey& other) {
  if (this != &other) {
    point_ = dup_point(other.point_);
    message_bits_ = other.message_bits_;
    fingerprint_ = other.fingerprint_;
  }
  return *this;
}
Bytes HEPublicKey::to_bytes() const {
  const auto enc = encode_point(pt(point_));
  return Bytes(enc.begin(), enc.end());
}

HESecretKey::HESecretKey() = default;
HESecretKey::~HESecretKey() = default;
HESecretKey::HESecretKey(const HESecretKey& other) : fingerprint_(other.fingerprint_) {
  if (other.scalar_) scalar_.reset(BN_dup(bn(other.scalar_)));
}
HESecretKey& HESecretKey::operator=(const HESecretKey& other) {
  if (this != &other) {
    scalar_.reset(other.scalar_ ? BN_dup(bn(other.scalar_)) : nullptr);
    fingerprint_ = other.fingerprint_;
  }
  return *this;
}
Bytes HESecretKey::to_bytes() const {
  Bytes out(32);
  check(BN_bn2binpad(bn(scalar_), out.data(), static_cast<int>(out.size())) == 32 ? 1 : 0, "scalar encode");
  return out;
}

HEKeyPair he_keygen(RandomStream& rand, unsigned message_bits) {
  if (message_bits == 0 || message_bits > 64) throw ArgumentError("message space must be 1..64 bits");
  HEKeyPair kp;
  Bn sk = random_scalar(rand);
  kp.pk.point_ = new_point();
  check(EC_POINT_mul(group(), pt(kp.pk.point_), sk.get(), nullptr, nullptr, bn_ctx()), "keygen");
  kp.pk.message_bits_ = message_bits;
  kp.pk.fingerprint_ = fingerprint_of(pt(kp.pk.point_));
  kp.sk.scalar_.reset(sk.release());
  kp.sk.fingerprint_ = kp.pk.fingerprint_;
  return kp;
}

HECiphertext he_enc(const HEPublicKey& pk, std::uint64_t m, RandomStream& rand) {
  check_message(pk, m);
  const Bn r = random_scalar(rand);
  const Bn mb = scalar_from_u64(m);
  HECiphertext c;
  c.c1_ = new_point();
  c.c2_ = new_point();
  check(EC_POINT_mul(group(), pt(c.c1_), r.get(), nullptr, nullptr, bn_ctx()), "enc c1");
  // c2 = m*G + r*P
  check(EC_POINT_mul(group(), pt(c.c2_), mb.get(), pt(pk.point_), r.get(), bn_ctx()), "enc c2");
  c.fingerprint_ = pk.fingerprint_;
  return c;
}

HECiphertext he_sub_plain(const HEPublicKey& pk, const HECiphertext& c, std::uint64_t m) {
  check_message(pk, m);
  if (c.fingerprint_ != pk.fingerprint_) throw DecryptionError("ciphertext was encrypted under another key");
  const Bn mb = scalar_from_u64(m);
  auto mg = new_point();
  check(EC_POINT_mul(group(), pt(mg), mb.get(), nullptr, nullptr, bn_ctx()), "sub mG");
  check(EC_POINT_invert(group(), pt(mg), bn_ctx()), "sub invert");
  HECiphertext out(c);
  check(EC_POINT_add(group(), pt(out.c2_), pt(c.c2_), pt(mg), bn_ctx()), "sub add");
  return out;
}

HECiphertext he_randomize(const HEPublicKey& pk, const HECiphertext& c, RandomStream& rand) {
  if (c.fingerprint_ != pk.fingerprint_) throw DecryptionError("ciphertext was encrypted under another key");
  const Bn s = random_scalar(rand);
  HECiphertext out;
  out.c1_ = new_point();
  out.c2_ = new_point();
  check(EC_POINT_mul(group(), pt(out.c1_), nullptr, pt(c.c1_), s.get(), bn_ctx()), "rand c1");
  check(EC_POINT_mul(group(), pt(out.c2_), nullptr, pt(c.c2_), s.get(), bn_ctx()), "rand c2");
  out.fingerprint_ = c.fingerprint_;
  return out;
}

bool he_is_zero(const HESecretKey& sk, const HECiphertext& c) {
  if (!sk.scalar_ || !c.c1_) throw DecryptionError("empty key or ciphertext");
  if (c.fingerprint_ != sk.fingerprint_) throw DecryptionError("ciphertext was encrypted under another key");
  auto shared = new_point();
  check(EC_POINT_mul(group(), pt(shared), nullptr, pt(c.c1_), bn(sk.scalar_), bn_ctx()), "zero test");
  const int cmp = EC_POINT_cmp(group(), pt(shared), pt(c.c2_), bn_ctx());
  if (cmp < 0) throw std::runtime_error("crypto: point comparison failed");
  return cmp == 0;
}

std::uint64_t hashed_identifier(ByteView device_id, unsigned bits) {
  if (bits == 0 || bits > 64) throw ArgumentError("message space must be 1..64 bits");
  const Digest d = hash(device_id);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = v << 8 | d.bytes[i];
  return bits == 64 ? v : v & ((std::uint64_t{1} << bits) - 1);
}

}  // namespace tracebench
