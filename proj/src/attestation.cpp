#include "agentnet/attestation.hpp"

#include "agentnet/errors.hpp"

namespace agentnet {

Bytes CapabilityToken::signing_body() const {
  BodyWriter w;
  w.raw(agent_id.bytes);
  w.str(capability_path);
  w.raw(manifest_digest);
  w.i64(not_before_ms);
  w.i64(not_after_ms);
  return w.take();
}

Bytes RevocationStaple::signing_body() const {
  BodyWriter w;
  w.raw(agent_id.bytes);
  w.i64(record_version.physical_ms);
  w.u32(record_version.logical);
  w.raw(record_version.node_tiebreak.bytes);
  w.i64(issued_ms);
  w.i64(valid_for_ms);
  return w.take();
}

const char* to_string(TokenStatus s) {
  switch (s) {
    case TokenStatus::Valid: return "Valid";
    case TokenStatus::NotYetValid: return "NotYetValid";
    case TokenStatus::Expired: return "Expired";
    case TokenStatus::SignatureInvalid: return "SignatureInvalid";
  }
  return "Unknown";
}

const char* to_string(StapleStatus s) {
  switch (s) {
    case StapleStatus::Valid: return "Valid";
    case StapleStatus::Expired: return "Expired";
    case StapleStatus::SignatureInvalid: return "SignatureInvalid";
  }
  return "Unknown";
}

CapabilityToken issue_capability_token(const KeyPair& keypair,
                                       const CapabilityDescriptor& descriptor,
                                       int64_t not_before_ms, int64_t not_after_ms) {
  if (not_before_ms >= not_after_ms) throw InvalidWindow("token validity window is empty");
  CapabilityToken token;
  token.agent_id = derive_agent_id(keypair.public_key);
  token.capability_path = descriptor.path;
  token.manifest_digest = descriptor.manifest_digest;
  token.not_before_ms = not_before_ms;
  token.not_after_ms = not_after_ms;
  token.signature = sign(keypair.secret_key, token.signing_body());
  return token;
}

TokenStatus verify_capability_token(const CapabilityToken& token, const PublicKey& key,
                                    int64_t now_ms) {
  if (!verify(key, token.signing_body(), token.signature)) return TokenStatus::SignatureInvalid;
  if (now_ms < token.not_before_ms) return TokenStatus::NotYetValid;
  if (now_ms >= token.not_after_ms) return TokenStatus::Expired;
  return TokenStatus::Valid;
}

RevocationStaple issue_staple(const KeyPair& keypair, const HlcStamp& record_version,
                              int64_t now_ms, int64_t valid_for_ms) {
  if (valid_for_ms <= 0) throw InvalidWindow("staple validity must be positive");
  RevocationStaple staple;
  staple.agent_id = derive_agent_id(keypair.public_key);
  staple.record_version = record_version;
  staple.issued_ms = now_ms;
  staple.valid_for_ms = valid_for_ms;
  staple.signature = sign(keypair.secret_key, staple.signing_body());
  return staple;
}

StapleStatus verify_staple(const RevocationStaple& staple, const PublicKey& key, int64_t now_ms) {
  if (!verify(key, staple.signing_body(), staple.signature)) return StapleStatus::SignatureInvalid;
  // Outside the window in either direction counts as not-live.
  if (now_ms < staple.issued_ms || now_ms >= staple.expires_at_ms()) return StapleStatus::Expired;
  return StapleStatus::Valid;
}

}  // namespace agentnet
