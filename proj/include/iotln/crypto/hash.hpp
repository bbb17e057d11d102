// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_CRYPTO_HASH_HPP
#define IOTLN_CRYPTO_HASH_HPP

#include <iotln/bytes.hpp>

#include <array>
#include <cstdint>

namespace iotln::crypto {

using Hash256 = std::array<std::uint8_t, 32>;

Hash256 sha256(ByteView data);
Hash256 hmac_sha256(ByteView key, ByteView data);

/// Constant-time comparison.
bool digest_equal(ByteView a, ByteView b) noexcept;

} // namespace iotln::crypto

#endif // IOTLN_CRYPTO_HASH_HPP
