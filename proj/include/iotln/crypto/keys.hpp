// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_CRYPTO_KEYS_HPP
#define IOTLN_CRYPTO_KEYS_HPP

#include <iotln/bytes.hpp>

#include <array>
#include <cstdint>
#include <random>
#include <string_view>

namespace iotln::crypto {

using PubKey = std::array<std::uint8_t, 32>;
using Signature = std::array<std::uint8_t, 64>;

struct PrivKey {
    std::array<std::uint8_t, 32> seed{};
    bool operator==(const PrivKey&) const = default;
};

struct KeyPair {
    PrivKey priv;
    PubKey pub{};
};

/// Seedable RNG used for every random choice in the simulator (session keys,
/// IVs, preimages, revocation material). Reproducibility matters more than
/// unpredictability here; this is not a CSPRNG.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform in [lo, hi].
    std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi);
    void fill(std::span<std::uint8_t> out);

    template <std::size_t N>
    std::array<std::uint8_t, N> bytes()
    {
        std::array<std::uint8_t, N> out{};
        fill(out);
        return out;
    }

    /// Independent child stream; used to give each agent its own RNG.
    Rng fork() { return Rng(engine_() ^ 0x9e3779b97f4a7c15ULL); }

private:
    std::mt19937_64 engine_;
};

/// Signature scheme interface. Chain validation and the agents go through
/// this so a different scheme can be slotted in.
class SignatureScheme {
public:
    virtual ~SignatureScheme() = default;
    virtual std::string_view name() const = 0;
    virtual KeyPair keypair_from_seed(const std::array<std::uint8_t, 32>& seed) const = 0;
    virtual Signature sign(ByteView msg, const PrivKey& key) const = 0;
    virtual bool verify(ByteView msg, const Signature& sig, const PubKey& pub) const noexcept = 0;
};

/// Ed25519 (deterministic signatures) backed by OpenSSL.
const SignatureScheme& ed25519();

KeyPair generate_keypair(Rng& rng, const SignatureScheme& scheme = ed25519());
Signature sign(ByteView msg, const PrivKey& key, const SignatureScheme& scheme = ed25519());
bool verify(ByteView msg, const Signature& sig, const PubKey& pub,
            const SignatureScheme& scheme = ed25519()) noexcept;

/// X25519 key pair used only for wrapping envelope session keys.
struct EncryptionKeyPair {
    std::array<std::uint8_t, 32> priv{};
    std::array<std::uint8_t, 32> pub{};
};

EncryptionKeyPair generate_encryption_keypair(Rng& rng);

} // namespace iotln::crypto

#endif // IOTLN_CRYPTO_KEYS_HPP
