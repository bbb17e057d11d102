// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef IOTLN_AMOUNT_HPP
#define IOTLN_AMOUNT_HPP

#include <cstdint>
#include <string>
#include <string_view>

namespace iotln {

/// Satoshi amount. Signed so that conservation arithmetic can go negative
/// in checks without wrapping.
using Amount = std::int64_t;

inline constexpr Amount kCoin = 100'000'000;

constexpr Amount btc(std::int64_t whole) { return whole * kCoin; }

/// "8.90000000" style rendering, always eight decimals.
std::string format_btc(Amount sat);

/// Parses "10", "0.1", "8.9" etc. into satoshis; rejects more than eight
/// decimals. Throws std::invalid_argument.
Amount parse_btc(std::string_view text);

} // namespace iotln

#endif // IOTLN_AMOUNT_HPP
