#include <doctest.h>

#include "agentnet/attestation.hpp"
#include "agentnet/errors.hpp"
#include "helpers.hpp"

using namespace agentnet;

TEST_CASE("capability tokens honor their half-open validity window") {
  KeyPair keys = testutil::kp(1);
  CapabilityToken tok = issue_capability_token(keys, testutil::cap("/translate-en-es"), 100, 200);

  CHECK(verify_capability_token(tok, keys.public_key, 99) == TokenStatus::NotYetValid);
  CHECK(verify_capability_token(tok, keys.public_key, 100) == TokenStatus::Valid);
  CHECK(verify_capability_token(tok, keys.public_key, 199) == TokenStatus::Valid);
  CHECK(verify_capability_token(tok, keys.public_key, 200) == TokenStatus::Expired);
  CHECK(verify_capability_token(tok, keys.public_key, 5000) == TokenStatus::Expired);
}

TEST_CASE("an empty token window is refused at issuance") {
  KeyPair keys = testutil::kp(1);
  CHECK_THROWS_AS(issue_capability_token(keys, testutil::cap("/x"), 100, 100), InvalidWindow);
  CHECK_THROWS_AS(issue_capability_token(keys, testutil::cap("/x"), 200, 100), InvalidWindow);
}

TEST_CASE("token tampering and wrong keys surface as SignatureInvalid") {
  KeyPair keys = testutil::kp(2);
  CapabilityToken tok = issue_capability_token(keys, testutil::cap("/a/b"), 0, 1000);

  SUBCASE("path edited after signing") {
    tok.capability_path = "/a/c";
    CHECK(verify_capability_token(tok, keys.public_key, 10) == TokenStatus::SignatureInvalid);
  }
  SUBCASE("window extended after signing") {
    tok.not_after_ms = 100000;
    CHECK(verify_capability_token(tok, keys.public_key, 10) == TokenStatus::SignatureInvalid);
  }
  SUBCASE("signed by someone else entirely") {
    KeyPair other = testutil::kp(3);
    CapabilityToken forged = issue_capability_token(other, testutil::cap("/a/b"), 0, 1000);
    forged.agent_id = derive_agent_id(keys.public_key);  // claims our id
    CHECK(verify_capability_token(forged, keys.public_key, 10) == TokenStatus::SignatureInvalid);
  }
  SUBCASE("signature check takes precedence over window checks") {
    tok.signature[0] ^= 1;
    CHECK(verify_capability_token(tok, keys.public_key, 999999) == TokenStatus::SignatureInvalid);
  }
}

TEST_CASE("staples are live exactly within [issued, issued + valid_for)") {
  KeyPair keys = testutil::kp(4);
  HlcClock clock = testutil::clock_for(keys);
  HlcStamp version = clock.next(50);
  RevocationStaple st = issue_staple(keys, version, 1000, kDefaultStapleWindowMs);

  CHECK(st.expires_at_ms() == 1500);
  CHECK(verify_staple(st, keys.public_key, 999) == StapleStatus::Expired);  // before issuance
  CHECK(verify_staple(st, keys.public_key, 1000) == StapleStatus::Valid);
  CHECK(verify_staple(st, keys.public_key, 1499) == StapleStatus::Valid);
  CHECK(verify_staple(st, keys.public_key, 1500) == StapleStatus::Expired);
}

TEST_CASE("staple issuance rejects non-positive windows") {
  KeyPair keys = testutil::kp(4);
  HlcClock clock = testutil::clock_for(keys);
  HlcStamp version = clock.next(0);
  CHECK_THROWS_AS(issue_staple(keys, version, 0, 0), InvalidWindow);
  CHECK_THROWS_AS(issue_staple(keys, version, 0, -5), InvalidWindow);
}

TEST_CASE("staple forgery is rejected regardless of timing") {
  KeyPair owner = testutil::kp(5);
  KeyPair other = testutil::kp(6);
  HlcClock clock = testutil::clock_for(owner);
  RevocationStaple st = issue_staple(owner, clock.next(0), 100, 400);

  CHECK(verify_staple(st, other.public_key, 200) == StapleStatus::SignatureInvalid);

  RevocationStaple tampered = st;
  tampered.valid_for_ms = 1'000'000;  // stretch the window
  CHECK(verify_staple(tampered, owner.public_key, 200) == StapleStatus::SignatureInvalid);

  tampered = st;
  tampered.issued_ms += 1;
  CHECK(verify_staple(tampered, owner.public_key, 200) == StapleStatus::SignatureInvalid);
}

TEST_CASE("the preset windows match the documented defaults") {
  CHECK(kDefaultStapleWindowMs == 500);
  CHECK(kOcspStyleStapleWindowMs == 60'000);
}
