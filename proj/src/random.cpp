#include "tracebench/random.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstring>
#include <memory>
#include <numbers>
#include <stdexcept>

namespace tracebench {

namespace {

std::array<std::uint8_t, 32> derive_key(std::span<const std::uint8_t> parent, std::string_view label) {
  static constexpr std::string_view kDomain = "tracebench/random-stream/v1";
  std::vector<std::uint8_t> msg(kDomain.begin(), kDomain.end());
  msg.insert(msg.end(), parent.begin(), parent.end());
  const std::uint64_t label_len = label.size();
  for (int i = 0; i < 8; ++i) msg.push_back(static_cast<std::uint8_t>(label_len >> (8 * i)));
  msg.insert(msg.end(), label.begin(), label.end());
  std::array<std::uint8_t, 32> key{};
  unsigned int len = 0;
  if (EVP_Digest(msg.data(), msg.size(), key.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("random stream: key derivation failed");
  }
  return key;
}

struct CipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
};

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::string_view label) {
  std::array<std::uint8_t, 8> seed_bytes{};
  for (int i = 0; i < 8; ++i) seed_bytes[i] = static_cast<std::uint8_t>(seed >> (8 * i));
  key_ = derive_key(seed_bytes, label);
}

RandomStream::RandomStream(const std::array<std::uint8_t, 32>& key) : key_(key) {}

RandomStream RandomStream::fork(std::string_view label) const { return RandomStream(derive_key(key_, label)); }

void RandomStream::refill() {
  std::array<std::uint8_t, 16> iv{};
  for (int i = 0; i < 8; ++i) iv[15 - i] = static_cast<std::uint8_t>(counter_ >> (8 * i));
  std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter> ctx(EVP_CIPHER_CTX_new());
  if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_ctr(), nullptr, key_.data(), iv.data()) != 1) {
    throw std::runtime_error("random stream: cipher init failed");
  }
  static const std::array<std::uint8_t, 4096> kZeros{};
  int len = 0;
  if (EVP_EncryptUpdate(ctx.get(), buffer_.data(), &len, kZeros.data(), static_cast<int>(kZeros.size())) != 1) {
    throw std::runtime_error("random stream: keystream generation failed");
  }
  counter_ += buffer_.size() / 16;
  pos_ = 0;
}

void RandomStream::fill(std::span<std::uint8_t> out) {
  std::size_t done = 0;
  while (done < out.size()) {
    if (pos_ == buffer_.size()) refill();
    const std::size_t take = std::min(out.size() - done, buffer_.size() - pos_);
    std::memcpy(out.data() + done, buffer_.data() + pos_, take);
    pos_ += take;
    done += take;
  }
}

std::vector<std::uint8_t> RandomStream::bytes(std::size_t n) {
  std::vector<std::uint8_t> v(n);
  fill(v);
  return v;
}

std::uint64_t RandomStream::next_u64() {
  std::array<std::uint8_t, 8> b{};
  fill(b);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t RandomStream::uniform_below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_below: bound must be positive");
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  for (;;) {
    const std::uint64_t v = next_u64();
    if (v < limit) return v % bound;
  }
}

double RandomStream::uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double RandomStream::normal(double mean, double sigma) {
  // Box-Muller; one draw per call keeps the stream position easy to reason about.
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  return mean + sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

bool RandomStream::bernoulli(double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return uniform01() < p;
}

std::vector<std::size_t> RandomStream::permutation(std::size_t n) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_below(i));
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

}  // namespace tracebench
