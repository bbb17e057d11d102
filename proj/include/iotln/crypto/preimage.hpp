// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_CRYPTO_PREIMAGE_HPP
#define IOTLN_CRYPTO_PREIMAGE_HPP

#include <iotln/crypto/hash.hpp>
#include <iotln/crypto/keys.hpp>

namespace iotln::crypto {

using Preimage = std::array<std::uint8_t, 32>;

struct PaymentSecret {
    Preimage preimage{};
    Hash256 hash{};
};

PaymentSecret new_preimage(Rng& rng);

inline bool check_preimage(const Preimage& preimage, const Hash256& hash)
{
    return digest_equal(sha256(preimage), hash);
}

} // namespace iotln::crypto

#endif // IOTLN_CRYPTO_PREIMAGE_HPP
