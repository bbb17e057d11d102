// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/amount.hpp>

#include <cstdio>
#include <stdexcept>

namespace iotln {

std::string format_btc(Amount sat)
{
    const bool neg = sat < 0;
    const auto mag = static_cast<std::uint64_t>(neg ? -sat : sat);
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%s%llu.%08llu", neg ? "-" : "",
                  static_cast<unsigned long long>(mag / kCoin),
                  static_cast<unsigned long long>(mag % kCoin));
    return buf;
}

Amount parse_btc(std::string_view text)
{
    if (text.empty()) throw std::invalid_argument("empty amount");
    bool neg = false;
    if (text.front() == '-') {
        neg = true;
        text.remove_prefix(1);
    }
    Amount whole = 0;
    Amount frac = 0;
    int frac_digits = 0;
    bool seen_dot = false;
    bool any_digit = false;
    for (char c : text) {
        if (c == '.') {
            if (seen_dot) throw std::invalid_argument("amount has two decimal points");
            seen_dot = true;
            continue;
        }
        if (c < '0' || c > '9') throw std::invalid_argument("invalid amount character");
        any_digit = true;
        if (seen_dot) {
            if (++frac_digits > 8) throw std::invalid_argument("more than 8 decimals");
            frac = frac * 10 + (c - '0');
        } else {
            whole = whole * 10 + (c - '0');
            if (whole > 21'000'000) throw std::invalid_argument("amount out of range");
        }
    }
    if (!any_digit) throw std::invalid_argument("amount has no digits");
    for (int i = frac_digits; i < 8; ++i) frac *= 10;
    Amount v = whole * kCoin + frac;
    return neg ? -v : v;
}

} // namespace iotln
