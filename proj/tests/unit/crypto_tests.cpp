// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/crypto/envelope.hpp>
#include <iotln/crypto/preimage.hpp>

#include <doctest.h>

using namespace iotln;
using namespace iotln::crypto;

namespace {

struct EnvelopeSetup {
    Rng rng{42};
    EncryptionKeyPair gateway = generate_encryption_keypair(rng);
    KeyPair issuer = generate_keypair(rng);
    KeyPair device = generate_keypair(rng);
    Certificate cert = issue_certificate(device.pub, issuer);
    SessionKeys session = SessionKeys::generate(rng);
    OpenPolicy policy{kDefaultFreshnessMs, issuer.pub};
};

Bytes payload_of(std::string_view s) { return {s.begin(), s.end()}; }

} // namespace

TEST_CASE("signatures verify only under the signing key")
{
    Rng rng(1);
    auto a = generate_keypair(rng);
    auto b = generate_keypair(rng);
    auto msg = as_bytes("co-sign the funding transaction");
    auto sig = sign(msg, a.priv);
    CHECK(verify(msg, sig, a.pub));
    CHECK_FALSE(verify(msg, sig, b.pub));
    CHECK_FALSE(verify(as_bytes("something else"), sig, a.pub));
    // Deterministic scheme: same key and message give the same signature.
    CHECK(sign(msg, a.priv) == sig);
}

TEST_CASE("keypairs and session keys are reproducible from the seed")
{
    Rng r1(99);
    Rng r2(99);
    CHECK(generate_keypair(r1).pub == generate_keypair(r2).pub);
    auto s1 = SessionKeys::generate(r1);
    auto s2 = SessionKeys::generate(r2);
    CHECK(s1.enc == s2.enc);
    CHECK(s1.mac == s2.mac);
    CHECK(s1.enc != s1.mac);
}

TEST_CASE("preimage check")
{
    Rng rng(3);
    auto secret = new_preimage(rng);
    CHECK(check_preimage(secret.preimage, secret.hash));
    auto other = new_preimage(rng);
    CHECK_FALSE(check_preimage(other.preimage, secret.hash));
}

TEST_CASE("envelope round trip with certificate")
{
    EnvelopeSetup s;
    auto payload = payload_of("SendPayment 1 BTC to toll");
    auto env = seal_envelope(payload, s.session, s.gateway.pub, 1'000, s.rng, s.cert);
    auto wire = env.serialize();
    auto opened = open_envelope(Envelope::parse(wire), s.gateway.priv, 1'500, s.policy);
    CHECK(opened.payload == payload);
    CHECK(opened.session.enc == s.session.enc);
    REQUIRE(opened.cert);
    CHECK(opened.cert->subject == s.device.pub);
}

TEST_CASE("seal is deterministic for a fixed seed")
{
    EnvelopeSetup a;
    EnvelopeSetup b;
    auto p = payload_of("golden");
    CHECK(seal_envelope(p, a.session, a.gateway.pub, 7, a.rng, a.cert).serialize() ==
          seal_envelope(p, b.session, b.gateway.pub, 7, b.rng, b.cert).serialize());
}

TEST_CASE("seal rejects an empty payload")
{
    EnvelopeSetup s;
    try {
        seal_envelope({}, s.session, s.gateway.pub, 0, s.rng);
        FAIL("expected EnvelopeError");
    } catch (const EnvelopeError& e) {
        CHECK(e.code() == EnvelopeErrc::EmptyPayload);
    }
}

namespace {
EnvelopeErrc open_error(const Envelope& env, const std::array<std::uint8_t, 32>& priv, std::uint64_t now,
                        const OpenPolicy& policy)
{
    try {
        open_envelope(env, priv, now, policy);
    } catch (const EnvelopeError& e) {
        return e.code();
    }
    FAIL("envelope unexpectedly opened");
    return EnvelopeErrc::Malformed;
}
} // namespace

TEST_CASE("open_envelope reports each defense distinctly")
{
    EnvelopeSetup s;
    auto env = seal_envelope(payload_of("pay 1 BTC"), s.session, s.gateway.pub, 10'000, s.rng, s.cert);

    SUBCASE("flipped ciphertext bit -> MacMismatch")
    {
        auto t = env;
        t.ciphertext[3] ^= 0x01;
        CHECK(open_error(t, s.gateway.priv, 10'000, s.policy) == EnvelopeErrc::MacMismatch);
    }
    SUBCASE("flipped mac bit -> MacMismatch")
    {
        auto t = env;
        t.mac[0] ^= 0x80;
        CHECK(open_error(t, s.gateway.priv, 10'000, s.policy) == EnvelopeErrc::MacMismatch);
    }
    SUBCASE("shifted timestamp -> MacMismatch")
    {
        auto t = env;
        t.timestamp_ms += 1;
        CHECK(open_error(t, s.gateway.priv, 10'000, s.policy) == EnvelopeErrc::MacMismatch);
    }
    SUBCASE("wrong recipient key -> DecryptFailure")
    {
        auto other = generate_encryption_keypair(s.rng);
        CHECK(open_error(env, other.priv, 10'000, s.policy) == EnvelopeErrc::DecryptFailure);
    }
    SUBCASE("replay after window -> StaleTimestamp")
    {
        CHECK(open_error(env, s.gateway.priv, 10'000 + kDefaultFreshnessMs + 1, s.policy) ==
              EnvelopeErrc::StaleTimestamp);
    }
    SUBCASE("certificate from another issuer -> BadCertificate")
    {
        auto rogue = generate_keypair(s.rng);
        auto t = seal_envelope(payload_of("pay"), s.session, s.gateway.pub, 10'000, s.rng,
                               issue_certificate(s.device.pub, rogue));
        CHECK(open_error(t, s.gateway.priv, 10'000, s.policy) == EnvelopeErrc::BadCertificate);
    }
    SUBCASE("missing certificate when required -> BadCertificate")
    {
        auto t = env;
        t.cert.reset();
        CHECK(open_error(t, s.gateway.priv, 10'000, s.policy) == EnvelopeErrc::BadCertificate);
    }
    SUBCASE("unknown version")
    {
        auto t = env;
        t.version = 2;
        CHECK(open_error(t, s.gateway.priv, 10'000, s.policy) == EnvelopeErrc::UnsupportedVersion);
    }
}

TEST_CASE("freshness boundary: edge accepted, edge + 1 ms rejected")
{
    EnvelopeSetup s;
    for (std::uint64_t window : {std::uint64_t{1}, std::uint64_t{250}, std::uint64_t{kDefaultFreshnessMs}}) {
        OpenPolicy policy{window, s.issuer.pub};
        const std::uint64_t ts = 100'000;
        auto env = seal_envelope(payload_of("x"), s.session, s.gateway.pub, ts, s.rng, s.cert);
        CHECK_NOTHROW(open_envelope(env, s.gateway.priv, ts + window, policy));
        CHECK_NOTHROW(open_envelope(env, s.gateway.priv, ts - window, policy));
        CHECK(open_error(env, s.gateway.priv, ts + window + 1, policy) == EnvelopeErrc::StaleTimestamp);
        CHECK(open_error(env, s.gateway.priv, ts - window - 1, policy) == EnvelopeErrc::StaleTimestamp);
    }
}

TEST_CASE("property: 1000 random single-byte mutations never yield a payload")
{
    EnvelopeSetup s;
    auto env = seal_envelope(payload_of("SendPayment amount=100000000 dest=toll"), s.session, s.gateway.pub,
                             50'000, s.rng, s.cert);
    const auto wire = env.serialize();
    Rng fuzz(2024);
    int opened = 0;
    for (int i = 0; i < 1000; ++i) {
        auto mutated = wire;
        auto pos = fuzz.uniform(0, mutated.size() - 1);
        auto delta = static_cast<std::uint8_t>(fuzz.uniform(1, 255));
        mutated[pos] ^= delta;
        try {
            open_envelope(Envelope::parse(mutated), s.gateway.priv, 50'000, s.policy);
            ++opened;
        } catch (const EnvelopeError&) {
        }
    }
    CHECK(opened == 0);
}

TEST_CASE("replay guard rejects a second delivery and evicts oldest")
{
    ReplayGuard guard(2);
    Hash256 a{};
    Hash256 b{};
    Hash256 c{};
    a[0] = 1;
    b[0] = 2;
    c[0] = 3;
    CHECK(guard.check_and_remember(a, 1));
    CHECK_FALSE(guard.check_and_remember(a, 1));
    CHECK(guard.check_and_remember(b, 2));
    CHECK(guard.check_and_remember(c, 3));
    CHECK(guard.size() == 2);
    // `a` was evicted; the freshness window is what bounds this in practice.
    CHECK(guard.check_and_remember(a, 1));
}

TEST_CASE("malformed wire bytes")
{
    CHECK_THROWS_AS(Envelope::parse(Bytes{1, 2, 3}), EnvelopeError);
    EnvelopeSetup s;
    auto wire = seal_envelope(payload_of("x"), s.session, s.gateway.pub, 0, s.rng).serialize();
    wire.push_back(0);
    CHECK_THROWS_AS(Envelope::parse(wire), EnvelopeError);
}
