#pragma once

// Bit-at-a-time CRC-16/DNP written from the textbook definition: feed each
// input octet bit-reversed, MSB-first, through the unreflected generator
// 0x3D65, then reflect the register and apply the final XOR. Shares no code
// with the table-driven implementation under test.

#include <cstdint>
#include <span>

namespace dnp3lab::test {

inline std::uint8_t reverse8(std::uint8_t b) {
    std::uint8_t r = 0;
    for (int i = 0; i < 8; ++i) {
        r = static_cast<std::uint8_t>((r << 1) | ((b >> i) & 1));
    }
    return r;
}

inline std::uint16_t reverse16(std::uint16_t v) {
    std::uint16_t r = 0;
    for (int i = 0; i < 16; ++i) {
        r = static_cast<std::uint16_t>((r << 1) | ((v >> i) & 1));
    }
    return r;
}

inline std::uint16_t crc16_dnp_bitwise(std::span<const std::uint8_t> data) {
    std::uint16_t reg = 0x0000;
    for (auto octet : data) {
        std::uint8_t in = reverse8(octet);
        for (int bit = 7; bit >= 0; --bit) {
            bool feedback = (((reg >> 15) & 1) ^ ((in >> bit) & 1)) != 0;
            reg = static_cast<std::uint16_t>(reg << 1);
            if (feedback) reg ^= 0x3D65;
        }
    }
    return static_cast<std::uint16_t>(reverse16(reg) ^ 0xFFFF);
}

}  // namespace dnp3lab::test
