// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/crypto/keys.hpp>
#include <iotln/crypto/preimage.hpp>

#include <openssl/evp.h>

#include <memory>
#include <stdexcept>

namespace iotln::crypto {

namespace {

struct PkeyDeleter {
    void operator()(EVP_PKEY* p) const noexcept { EVP_PKEY_free(p); }
};
struct MdCtxDeleter {
    void operator()(EVP_MD_CTX* p) const noexcept { EVP_MD_CTX_free(p); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;

std::array<std::uint8_t, 32> raw_public(EVP_PKEY* key)
{
    std::array<std::uint8_t, 32> pub{};
    std::size_t len = pub.size();
    if (EVP_PKEY_get_raw_public_key(key, pub.data(), &len) != 1 || len != pub.size())
        throw std::runtime_error("cannot extract raw public key");
    return pub;
}

class Ed25519Scheme final : public SignatureScheme {
public:
    std::string_view name() const override { return "ed25519"; }

    KeyPair keypair_from_seed(const std::array<std::uint8_t, 32>& seed) const override
    {
        PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed.data(), seed.size()));
        if (!key) throw std::runtime_error("ed25519 key construction failed");
        KeyPair kp;
        kp.priv.seed = seed;
        kp.pub = raw_public(key.get());
        return kp;
    }

    Signature sign(ByteView msg, const PrivKey& priv) const override
    {
        PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, priv.seed.data(),
                                                 priv.seed.size()));
        MdCtxPtr ctx(EVP_MD_CTX_new());
        if (!key || !ctx || EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1)
            throw std::runtime_error("ed25519 sign init failed");
        Signature sig{};
        std::size_t len = sig.size();
        if (EVP_DigestSign(ctx.get(), sig.data(), &len, msg.data(), msg.size()) != 1 || len != sig.size())
            throw std::runtime_error("ed25519 sign failed");
        return sig;
    }

    bool verify(ByteView msg, const Signature& sig, const PubKey& pub) const noexcept override
    {
        PkeyPtr key(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, pub.data(), pub.size()));
        MdCtxPtr ctx(EVP_MD_CTX_new());
        if (!key || !ctx) return false;
        if (EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1) return false;
        return EVP_DigestVerify(ctx.get(), sig.data(), sig.size(), msg.data(), msg.size()) == 1;
    }
};

} // namespace

std::uint64_t Rng::uniform(std::uint64_t lo, std::uint64_t hi)
{
    return std::uniform_int_distribution<std::uint64_t>(lo, hi)(engine_);
}

void Rng::fill(std::span<std::uint8_t> out)
{
    std::size_t i = 0;
    while (i < out.size()) {
        auto word = engine_();
        for (int b = 0; b < 8 && i < out.size(); ++b, ++i) {
            out[i] = static_cast<std::uint8_t>(word);
            word >>= 8;
        }
    }
}

const SignatureScheme& ed25519()
{
    static const Ed25519Scheme scheme;
    return scheme;
}

KeyPair generate_keypair(Rng& rng, const SignatureScheme& scheme)
{
    return scheme.keypair_from_seed(rng.bytes<32>());
}

Signature sign(ByteView msg, const PrivKey& key, const SignatureScheme& scheme)
{
    return scheme.sign(msg, key);
}

bool verify(ByteView msg, const Signature& sig, const PubKey& pub, const SignatureScheme& scheme) noexcept
{
    return scheme.verify(msg, sig, pub);
}

EncryptionKeyPair generate_encryption_keypair(Rng& rng)
{
    EncryptionKeyPair kp;
    kp.priv = rng.bytes<32>();
    PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_X25519, nullptr, kp.priv.data(), kp.priv.size()));
    if (!key) throw std::runtime_error("x25519 key construction failed");
    kp.pub = raw_public(key.get());
    return kp;
}

PaymentSecret new_preimage(Rng& rng)
{
    PaymentSecret s;
    s.preimage = rng.bytes<32>();
    s.hash = sha256(s.preimage);
    return s;
}

} // namespace iotln::crypto
