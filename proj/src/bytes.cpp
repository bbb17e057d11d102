// Copyright (c) 2026 The iotln developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <iotln/bytes.hpp>

#include <algorithm>

namespace iotln {

namespace {
constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c)
{
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}
} // namespace

std::string to_hex(ByteView data)
{
    std::string out;
    out.reserve(data.size() * 2);
    for (auto b : data) {
        out.push_back(kHexDigits[b >> 4]);
        out.push_back(kHexDigits[b & 0x0f]);
    }
    return out;
}

Bytes from_hex(std::string_view hex)
{
    if (hex.size() % 2 != 0) throw DecodeError("odd-length hex string");
    Bytes out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        int hi = hex_value(hex[i]);
        int lo = hex_value(hex[i + 1]);
        if (hi < 0 || lo < 0) throw DecodeError("invalid hex digit");
        out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
    }
    return out;
}

void ByteWriter::u16(std::uint16_t v)
{
    u8(static_cast<std::uint8_t>(v >> 8));
    u8(static_cast<std::uint8_t>(v));
}

void ByteWriter::u32(std::uint32_t v)
{
    for (int shift = 24; shift >= 0; shift -= 8) u8(static_cast<std::uint8_t>(v >> shift));
}

void ByteWriter::u64(std::uint64_t v)
{
    for (int shift = 56; shift >= 0; shift -= 8) u8(static_cast<std::uint8_t>(v >> shift));
}

void ByteWriter::var(ByteView data)
{
    u32(static_cast<std::uint32_t>(data.size()));
    raw(data);
}

std::uint8_t ByteReader::u8()
{
    if (remaining() < 1) throw DecodeError("unexpected end of input");
    return data_[pos_++];
}

std::uint16_t ByteReader::u16()
{
    std::uint16_t hi = u8();
    return static_cast<std::uint16_t>((hi << 8) | u8());
}

std::uint32_t ByteReader::u32()
{
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | u8();
    return v;
}

std::uint64_t ByteReader::u64()
{
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | u8();
    return v;
}

ByteView ByteReader::raw(std::size_t n)
{
    if (remaining() < n) throw DecodeError("unexpected end of input");
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
}

Bytes ByteReader::var()
{
    auto n = u32();
    auto v = raw(n);
    return {v.begin(), v.end()};
}

std::string ByteReader::str()
{
    auto b = var();
    return {b.begin(), b.end()};
}

void ByteReader::expect_end() const
{
    if (!empty()) throw DecodeError("trailing bytes");
}

} // namespace iotln
