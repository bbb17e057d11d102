// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/crypto/envelope.hpp>

#include <openssl/evp.h>

#include <cstring>
#include <memory>

namespace iotln::crypto {

namespace {

constexpr std::size_t kNonceLen = 12;
constexpr std::size_t kTagLen = 16;
constexpr std::size_t kKeyBlobLen = 64;
constexpr std::size_t kWrappedLen = 32 + kNonceLen + kKeyBlobLen + kTagLen;
constexpr std::size_t kCertLen = 32 + 32 + 64;

struct PkeyDeleter {
    void operator()(EVP_PKEY* p) const noexcept { EVP_PKEY_free(p); }
};
struct PkeyCtxDeleter {
    void operator()(EVP_PKEY_CTX* p) const noexcept { EVP_PKEY_CTX_free(p); }
};
struct CipherCtxDeleter {
    void operator()(EVP_CIPHER_CTX* p) const noexcept { EVP_CIPHER_CTX_free(p); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;
using PkeyCtxPtr = std::unique_ptr<EVP_PKEY_CTX, PkeyCtxDeleter>;
using CipherCtxPtr = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;

using Key32 = std::array<std::uint8_t, 32>;

Key32 x25519_public(const Key32& priv)
{
    PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_X25519, nullptr, priv.data(), priv.size()));
    if (!key) throw EnvelopeError(EnvelopeErrc::DecryptFailure);
    Key32 pub{};
    std::size_t len = pub.size();
    if (EVP_PKEY_get_raw_public_key(key.get(), pub.data(), &len) != 1)
        throw EnvelopeError(EnvelopeErrc::DecryptFailure);
    return pub;
}

// Returns false on a degenerate peer key.
bool x25519_shared(const Key32& priv, const Key32& peer_pub, Key32& out)
{
    PkeyPtr own(EVP_PKEY_new_raw_private_key(EVP_PKEY_X25519, nullptr, priv.data(), priv.size()));
    PkeyPtr peer(EVP_PKEY_new_raw_public_key(EVP_PKEY_X25519, nullptr, peer_pub.data(), peer_pub.size()));
    if (!own || !peer) return false;
    PkeyCtxPtr ctx(EVP_PKEY_CTX_new(own.get(), nullptr));
    if (!ctx || EVP_PKEY_derive_init(ctx.get()) != 1 || EVP_PKEY_derive_set_peer(ctx.get(), peer.get()) != 1)
        return false;
    std::size_t len = out.size();
    return EVP_PKEY_derive(ctx.get(), out.data(), &len) == 1 && len == out.size();
}

Key32 wrap_kdf(const Key32& shared, const Key32& eph_pub, const Key32& recipient_pub)
{
    ByteWriter w;
    w.raw(as_bytes("iotln-envelope-wrap-v1"));
    w.raw(shared);
    w.raw(eph_pub);
    w.raw(recipient_pub);
    return sha256(w.bytes());
}

Bytes aes_cbc(bool encrypt, const Key32& key, const std::array<std::uint8_t, 16>& iv, ByteView in)
{
    CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
    if (!ctx) throw std::runtime_error("cipher context allocation failed");
    if (EVP_CipherInit_ex(ctx.get(), EVP_aes_256_cbc(), nullptr, key.data(), iv.data(), encrypt ? 1 : 0) != 1)
        throw std::runtime_error("aes-256-cbc init failed");
    Bytes out(in.size() + 16);
    int n1 = 0;
    int n2 = 0;
    if (EVP_CipherUpdate(ctx.get(), out.data(), &n1, in.data(), static_cast<int>(in.size())) != 1 ||
        EVP_CipherFinal_ex(ctx.get(), out.data() + n1, &n2) != 1) {
        throw EnvelopeError(EnvelopeErrc::DecryptFailure);
    }
    out.resize(static_cast<std::size_t>(n1 + n2));
    return out;
}

Bytes gcm_seal(const Key32& key, ByteView nonce, ByteView plain)
{
    CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
    Bytes out(plain.size() + kTagLen);
    int n = 0;
    int fin = 0;
    if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
        EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(nonce.size()), nullptr) != 1 ||
        EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()) != 1 ||
        EVP_EncryptUpdate(ctx.get(), out.data(), &n, plain.data(), static_cast<int>(plain.size())) != 1 ||
        EVP_EncryptFinal_ex(ctx.get(), out.data() + n, &fin) != 1 ||
        EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kTagLen, out.data() + plain.size()) != 1) {
        throw std::runtime_error("aes-256-gcm seal failed");
    }
    return out;
}

bool gcm_open(const Key32& key, ByteView nonce, ByteView sealed, std::span<std::uint8_t> plain)
{
    if (sealed.size() != plain.size() + kTagLen) return false;
    CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
    std::array<std::uint8_t, kTagLen> tag{};
    std::memcpy(tag.data(), sealed.data() + plain.size(), kTagLen);
    int n = 0;
    int fin = 0;
    return ctx && EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) == 1 &&
           EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(nonce.size()), nullptr) == 1 &&
           EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()) == 1 &&
           EVP_DecryptUpdate(ctx.get(), plain.data(), &n, sealed.data(), static_cast<int>(plain.size())) == 1 &&
           EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kTagLen, tag.data()) == 1 &&
           EVP_DecryptFinal_ex(ctx.get(), plain.data() + n, &fin) == 1;
}

Hash256 envelope_mac(const SessionKeys& session, const Envelope& env)
{
    ByteWriter w;
    w.raw(env.iv);
    w.raw(env.ciphertext);
    w.u64(env.timestamp_ms);
    return hmac_sha256(session.mac, w.bytes());
}

Bytes certificate_message(const PubKey& subject, const PubKey& issuer)
{
    ByteWriter w;
    w.raw(as_bytes("iotln-cert-v1"));
    w.raw(subject);
    w.raw(issuer);
    return std::move(w).take();
}

} // namespace

std::string_view to_string(EnvelopeErrc code)
{
    switch (code) {
    case EnvelopeErrc::EmptyPayload: return "EmptyPayload";
    case EnvelopeErrc::Malformed: return "Malformed";
    case EnvelopeErrc::UnsupportedVersion: return "UnsupportedVersion";
    case EnvelopeErrc::DecryptFailure: return "DecryptFailure";
    case EnvelopeErrc::MacMismatch: return "MacMismatch";
    case EnvelopeErrc::StaleTimestamp: return "StaleTimestamp";
    case EnvelopeErrc::BadCertificate: return "BadCertificate";
    case EnvelopeErrc::Replayed: return "Replayed";
    }
    return "Unknown";
}

EnvelopeError::EnvelopeError(EnvelopeErrc code)
    : std::runtime_error(std::string("envelope rejected: ") + std::string(to_string(code))), code_(code)
{
}

SessionKeys SessionKeys::generate(Rng& rng)
{
    SessionKeys keys;
    keys.enc = rng.bytes<32>();
    do {
        keys.mac = rng.bytes<32>();
    } while (keys.mac == keys.enc);
    return keys;
}

Bytes Certificate::serialize() const
{
    ByteWriter w;
    w.raw(subject);
    w.raw(issuer);
    w.raw(signature);
    return std::move(w).take();
}

Certificate Certificate::parse(ByteView data)
{
    ByteReader r(data);
    Certificate c;
    c.subject = r.fixed<32>();
    c.issuer = r.fixed<32>();
    c.signature = r.fixed<64>();
    r.expect_end();
    return c;
}

Certificate issue_certificate(const PubKey& subject, const KeyPair& issuer)
{
    Certificate c;
    c.subject = subject;
    c.issuer = issuer.pub;
    c.signature = sign(certificate_message(subject, issuer.pub), issuer.priv);
    return c;
}

bool verify_certificate(const Certificate& cert, const PubKey& trusted_issuer)
{
    return cert.issuer == trusted_issuer &&
           verify(certificate_message(cert.subject, cert.issuer), cert.signature, cert.issuer);
}

Bytes Envelope::serialize() const
{
    ByteWriter w;
    w.u8(version);
    w.u64(timestamp_ms);
    w.var(wrapped_keys);
    w.raw(iv);
    w.var(ciphertext);
    w.raw(mac);
    if (cert) {
        w.var(cert->serialize());
    } else {
        w.u32(0);
    }
    return std::move(w).take();
}

Envelope Envelope::parse(ByteView wire)
{
    try {
        ByteReader r(wire);
        Envelope env;
        env.version = r.u8();
        env.timestamp_ms = r.u64();
        env.wrapped_keys = r.var();
        env.iv = r.fixed<16>();
        env.ciphertext = r.var();
        env.mac = r.fixed<32>();
        auto cert = r.var();
        if (!cert.empty()) {
            if (cert.size() != kCertLen) throw DecodeError("bad certificate length");
            env.cert = Certificate::parse(cert);
        }
        r.expect_end();
        return env;
    } catch (const DecodeError&) {
        throw EnvelopeError(EnvelopeErrc::Malformed);
    }
}

Envelope seal_envelope(ByteView payload, const SessionKeys& session, const Key32& recipient_pub,
                       std::uint64_t now_ms, Rng& rng, std::optional<Certificate> cert)
{
    if (payload.empty()) throw EnvelopeError(EnvelopeErrc::EmptyPayload);

    Envelope env;
    env.timestamp_ms = now_ms;
    env.cert = std::move(cert);

    auto eph = generate_encryption_keypair(rng);
    Key32 shared{};
    if (!x25519_shared(eph.priv, recipient_pub, shared))
        throw std::invalid_argument("recipient public key is not usable for x25519");
    auto wrap_key = wrap_kdf(shared, eph.pub, recipient_pub);
    auto nonce = rng.bytes<kNonceLen>();
    std::array<std::uint8_t, kKeyBlobLen> blob{};
    std::memcpy(blob.data(), session.enc.data(), 32);
    std::memcpy(blob.data() + 32, session.mac.data(), 32);

    ByteWriter w;
    w.raw(eph.pub);
    w.raw(nonce);
    w.raw(gcm_seal(wrap_key, nonce, blob));
    env.wrapped_keys = std::move(w).take();

    env.iv = rng.bytes<16>();
    env.ciphertext = aes_cbc(true, session.enc, env.iv, payload);
    env.mac = envelope_mac(session, env);
    return env;
}

OpenedEnvelope open_envelope(const Envelope& env, const Key32& own_priv, std::uint64_t now_ms,
                             const OpenPolicy& policy)
{
    if (env.version != kEnvelopeVersion) throw EnvelopeError(EnvelopeErrc::UnsupportedVersion);
    if (env.wrapped_keys.size() != kWrappedLen) throw EnvelopeError(EnvelopeErrc::DecryptFailure);

    ByteReader r(env.wrapped_keys);
    auto eph_pub = r.fixed<32>();
    auto nonce = r.raw(kNonceLen);
    auto sealed = r.raw(kKeyBlobLen + kTagLen);

    Key32 shared{};
    if (!x25519_shared(own_priv, eph_pub, shared)) throw EnvelopeError(EnvelopeErrc::DecryptFailure);
    auto wrap_key = wrap_kdf(shared, eph_pub, x25519_public(own_priv));
    std::array<std::uint8_t, kKeyBlobLen> blob{};
    if (!gcm_open(wrap_key, nonce, sealed, blob)) throw EnvelopeError(EnvelopeErrc::DecryptFailure);

    OpenedEnvelope out;
    std::memcpy(out.session.enc.data(), blob.data(), 32);
    std::memcpy(out.session.mac.data(), blob.data() + 32, 32);

    if (!digest_equal(envelope_mac(out.session, env), env.mac)) throw EnvelopeError(EnvelopeErrc::MacMismatch);

    const auto age = now_ms > env.timestamp_ms ? now_ms - env.timestamp_ms : env.timestamp_ms - now_ms;
    if (age > policy.freshness_window_ms) throw EnvelopeError(EnvelopeErrc::StaleTimestamp);

    if (env.cert) {
        // A present certificate must always be genuine, even when policy does
        // not demand one; otherwise cert bytes would be unauthenticated.
        const auto issuer = policy.trusted_issuer.value_or(env.cert->issuer);
        if (!verify_certificate(*env.cert, issuer)) throw EnvelopeError(EnvelopeErrc::BadCertificate);
    } else if (policy.trusted_issuer) {
        throw EnvelopeError(EnvelopeErrc::BadCertificate);
    }

    out.payload = aes_cbc(false, out.session.enc, env.iv, env.ciphertext);
    if (out.payload.empty()) throw EnvelopeError(EnvelopeErrc::DecryptFailure);
    out.cert = env.cert;
    return out;
}

std::size_t ReplayGuard::KeyHash::operator()(const Hash256& h) const noexcept
{
    std::size_t v = 0;
    std::memcpy(&v, h.data(), sizeof(v));
    return v;
}

bool ReplayGuard::check_and_remember(const Hash256& mac, std::uint64_t timestamp_ms)
{
    if (index_.contains(mac)) return false;
    order_.emplace_front(mac, timestamp_ms);
    index_.emplace(mac, order_.begin());
    if (index_.size() > capacity_) {
        index_.erase(order_.back().first);
        order_.pop_back();
    }
    return true;
}

} // namespace iotln::crypto
