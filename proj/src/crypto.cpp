#include "agentnet/crypto.hpp"

#include <sodium.h>

#include <mutex>

#include "agentnet/errors.hpp"

namespace agentnet {

namespace {

void ensure_sodium() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) throw Error("libsodium initialization failed");
  });
}

int hex_nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string hex_encode(std::span<const uint8_t> data) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (uint8_t b : data) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xf]);
  }
  return out;
}

Bytes hex_decode(std::string_view hex) {
  if (hex.size() % 2 != 0) throw Error("hex string has odd length");
  Bytes out(hex.size() / 2);
  for (size_t i = 0; i < out.size(); ++i) {
    int hi = hex_nibble(hex[2 * i]);
    int lo = hex_nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw Error("invalid hex digit");
    out[i] = static_cast<uint8_t>((hi << 4) | lo);
  }
  return out;
}

AgentId AgentId::from_hex(std::string_view h) {
  Bytes raw = hex_decode(h);
  if (raw.size() != 32) throw InvalidKey("agent id must be 32 bytes");
  AgentId id;
  std::copy(raw.begin(), raw.end(), id.bytes.begin());
  return id;
}

Digest32 sha256(std::span<const uint8_t> data) {
  ensure_sodium();
  Digest32 out;
  crypto_hash_sha256(out.data(), data.data(), data.size());
  return out;
}

KeyPair generate_keypair(std::span<const uint8_t> seed) {
  ensure_sodium();
  if (seed.size() != kSeedLen) throw InvalidSeed("key seed must be exactly 32 bytes");
  KeyPair kp;
  crypto_sign_seed_keypair(kp.public_key.data(), kp.secret_key.data(), seed.data());
  return kp;
}

AgentId derive_agent_id(const PublicKey& public_key) {
  return AgentId{sha256(public_key)};
}

AgentId derive_agent_id(std::span<const uint8_t> public_key) {
  if (public_key.size() != 32) throw InvalidKey("verification key must be 32 bytes");
  return AgentId{sha256(public_key)};
}

Signature sign(const SecretKey& key, std::span<const uint8_t> message) {
  ensure_sodium();
  Signature sig;
  crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), key.data());
  return sig;
}

bool verify(const PublicKey& key, std::span<const uint8_t> message, const Signature& sig) {
  ensure_sodium();
  return crypto_sign_verify_detached(sig.data(), message.data(), message.size(), key.data()) == 0;
}

}  // namespace agentnet
