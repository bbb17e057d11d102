// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_CRYPTO_ENVELOPE_HPP
#define IOTLN_CRYPTO_ENVELOPE_HPP

#include <iotln/crypto/hash.hpp>
#include <iotln/crypto/keys.hpp>

#include <cstdint>
#include <list>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <unordered_map>

namespace iotln::crypto {

/*
 * Device <-> gateway envelope.
 *
 * Wire layout, version 1 (all integers big-endian):
 *
 *   [version:1][timestamp_ms:8]
 *   [wrapped_keys_len:4][wrapped_keys]
 *   [iv:16]
 *   [ciphertext_len:4][ciphertext]
 *   [mac:32]
 *   [cert_len:4][cert]            cert_len == 0 means no certificate
 *
 * wrapped_keys = [ephemeral_x25519_pub:32][gcm_nonce:12][aes256gcm(k_s || k_mac):64][tag:16]
 * ciphertext   = AES-256-CBC(k_s, iv, payload) with PKCS#7 padding
 * mac          = HMAC-SHA256(k_mac, iv || ciphertext || timestamp_ms)
 * cert         = [subject:32][issuer:32][issuer_signature:64]
 */
inline constexpr std::uint8_t kEnvelopeVersion = 1;
inline constexpr std::uint64_t kDefaultFreshnessMs = 30'000;

enum class EnvelopeErrc {
    EmptyPayload,
    Malformed,
    UnsupportedVersion,
    DecryptFailure,
    MacMismatch,
    StaleTimestamp,
    BadCertificate,
    Replayed,
};

std::string_view to_string(EnvelopeErrc code);

class EnvelopeError : public std::runtime_error {
public:
    explicit EnvelopeError(EnvelopeErrc code);
    EnvelopeErrc code() const noexcept { return code_; }

private:
    EnvelopeErrc code_;
};

struct SessionKeys {
    std::array<std::uint8_t, 32> enc{};
    std::array<std::uint8_t, 32> mac{};

    /// Fresh pair; guaranteed enc != mac.
    static SessionKeys generate(Rng& rng);
};

struct Certificate {
    PubKey subject{};
    PubKey issuer{};
    Signature signature{};

    Bytes serialize() const;
    static Certificate parse(ByteView data);
};

Certificate issue_certificate(const PubKey& subject, const KeyPair& issuer);
bool verify_certificate(const Certificate& cert, const PubKey& trusted_issuer);

struct Envelope {
    std::uint8_t version = kEnvelopeVersion;
    std::uint64_t timestamp_ms = 0;
    Bytes wrapped_keys;
    std::array<std::uint8_t, 16> iv{};
    Bytes ciphertext;
    Hash256 mac{};
    std::optional<Certificate> cert;

    Bytes serialize() const;
    /// Throws EnvelopeError(Malformed) on any framing problem.
    static Envelope parse(ByteView wire);
};

Envelope seal_envelope(ByteView payload, const SessionKeys& session,
                       const std::array<std::uint8_t, 32>& recipient_pub,
                       std::uint64_t now_ms, Rng& rng,
                       std::optional<Certificate> cert = std::nullopt);

struct OpenPolicy {
    std::uint64_t freshness_window_ms = kDefaultFreshnessMs;
    /// When set, a certificate must be present and chain to this issuer.
    std::optional<PubKey> trusted_issuer;
};

struct OpenedEnvelope {
    Bytes payload;
    SessionKeys session;
    std::optional<Certificate> cert;
};

/// Checks run in order: key unwrap, MAC, freshness, certificate, payload
/// decryption. The first failing check determines the error code.
OpenedEnvelope open_envelope(const Envelope& env,
                             const std::array<std::uint8_t, 32>& own_priv,
                             std::uint64_t now_ms, const OpenPolicy& policy = {});

/// Bounded LRU of (mac, timestamp) pairs already accepted. Timestamps alone
/// cannot stop a replay inside the freshness window; this does. One instance
/// per receiving gateway, not thread-safe.
class ReplayGuard {
public:
    explicit ReplayGuard(std::size_t capacity = 4096) : capacity_(capacity) {}

    /// Returns false if the pair has been seen; otherwise remembers it.
    bool check_and_remember(const Hash256& mac, std::uint64_t timestamp_ms);
    std::size_t size() const { return index_.size(); }

private:
    struct KeyHash {
        std::size_t operator()(const Hash256& h) const noexcept;
    };
    using Entry = std::pair<Hash256, std::uint64_t>;

    std::size_t capacity_;
    std::list<Entry> order_;
    std::unordered_map<Hash256, std::list<Entry>::iterator, KeyHash> index_;
};

} // namespace iotln::crypto

#endif // IOTLN_CRYPTO_ENVELOPE_HPP
