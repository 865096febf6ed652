#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ledlink/bits.hpp"

namespace ledlink {

// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final xor.
// Check value: "123456789" -> 0x29B1.
namespace detail {

inline const std::array<uint16_t, 256>& crc16_table() {
    static const std::array<uint16_t, 256> table = [] {
        std::array<uint16_t, 256> t{};
        for (uint32_t i = 0; i < 256; ++i) {
            uint16_t r = uint16_t(i << 8);
            for (int k = 0; k < 8; ++k)
                r = (r & 0x8000u) ? uint16_t((r << 1) ^ 0x1021u) : uint16_t(r << 1);
            t[i] = r;
        }
        return t;
    }();
    return table;
}

}  // namespace detail

inline uint16_t crc16_ccitt_false(const uint8_t* data, size_t n) {
    uint16_t crc = 0xFFFFu;
    const auto& table = detail::crc16_table();
    for (size_t i = 0; i < n; ++i)
        crc = uint16_t((crc << 8) ^ table[((crc >> 8) ^ data[i]) & 0xFFu]);
    return crc;
}

inline uint16_t crc16_ccitt_false(const std::vector<uint8_t>& bytes) {
    return crc16_ccitt_false(bytes.data(), bytes.size());
}

// Payload must be a whole number of bytes; bits are MSB-first within bytes.
inline uint16_t compute_crc16(const Bits& payload) {
    if (payload.size() % 8 != 0)
        throw std::invalid_argument("compute_crc16: payload length must be a multiple of 8 bits");
    return crc16_ccitt_false(bits::pack(payload));
}

}  // namespace ledlink
