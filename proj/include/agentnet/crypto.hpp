#pragma once

#include <array>
#include <compare>
#include <functional>
#include <span>

#include "agentnet/bytes.hpp"

namespace agentnet {

inline constexpr size_t kSeedLen = 32;

using PublicKey = std::array<uint8_t, 32>;
using SecretKey = std::array<uint8_t, 64>;
using Signature = std::array<uint8_t, 64>;

/// Ed25519 signing key pair. Generation is deterministic in the seed.
struct KeyPair {
  PublicKey public_key{};
  SecretKey secret_key{};
};

/// Hash-derived, location-independent agent identifier: the 32-byte digest
/// of the agent's public key. Doubles as the overlay node id, so it lives
/// in the same 256-bit space as the DHT distance metric.
struct AgentId {
  Digest32 bytes{};

  std::string hex() const { return hex_encode(bytes); }
  static AgentId from_hex(std::string_view h);

  auto operator<=>(const AgentId&) const = default;
};

Digest32 sha256(std::span<const uint8_t> data);

KeyPair generate_keypair(std::span<const uint8_t> seed);  // throws InvalidSeed unless 32 bytes

AgentId derive_agent_id(const PublicKey& public_key);
AgentId derive_agent_id(std::span<const uint8_t> public_key);  // throws InvalidKey on bad width

Signature sign(const SecretKey& key, std::span<const uint8_t> message);
bool verify(const PublicKey& key, std::span<const uint8_t> message, const Signature& sig);

}  // namespace agentnet

template <>
struct std::hash<agentnet::AgentId> {
  size_t operator()(const agentnet::AgentId& id) const noexcept {
    size_t h;
    std::memcpy(&h, id.bytes.data(), sizeof(h));
    return h;
  }
};
