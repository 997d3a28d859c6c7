#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dnp3lab {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// Two lowercase hex digits per octet, space separated, 16 octets per line.
/// Lines are joined with '\n'; there is no trailing newline.
std::string hex_dump(ByteView data);

/// Hex without separators ("0564..."), used inside capture records.
std::string to_hex(ByteView data);

/// Accepts any mix of whitespace, ':' and '-' between digit pairs, and an
/// optional leading "0x". Throws std::invalid_argument on odd digit counts
/// or non-hex characters.
Bytes parse_hex(std::string_view text);

inline void put_u16le(Bytes& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline std::uint16_t get_u16le(ByteView in, std::size_t at) {
    return static_cast<std::uint16_t>(in[at] | (in[at + 1] << 8));
}

inline void put_u32le(Bytes& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32le(ByteView in, std::size_t at) {
    return static_cast<std::uint32_t>(in[at]) | (static_cast<std::uint32_t>(in[at + 1]) << 8) |
           (static_cast<std::uint32_t>(in[at + 2]) << 16) | (static_cast<std::uint32_t>(in[at + 3]) << 24);
}

}  // namespace dnp3lab
