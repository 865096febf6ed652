#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>

#include "ledlink/bits.hpp"
#include "ledlink/crc16.hpp"

namespace ledlink {

inline constexpr size_t kPreambleBits = 8;
inline constexpr size_t kPayloadBits = 256;
inline constexpr size_t kCrcBits = 16;
inline constexpr size_t kFrameBits = kPreambleBits + kPayloadBits + kCrcBits;  // 280

// Preamble: eight alternating bits, 10101010.
inline Bits preamble_bits() {
    return Bits{1, 0, 1, 0, 1, 0, 1, 0};
}

struct Frame {
    Bits payload;  // exactly 256 bits
    uint16_t crc = 0;
};

// preamble | payload | crc, 280 bits total.
inline Bits build_frame(const Bits& payload) {
    if (payload.size() != kPayloadBits)
        throw std::invalid_argument("build_frame: payload must be exactly 256 bits");
    Bits out = preamble_bits();
    out.reserve(kFrameBits);
    out.insert(out.end(), payload.begin(), payload.end());
    uint16_t crc = compute_crc16(payload);
    for (int k = 15; k >= 0; --k) out.push_back((crc >> k) & 1u);
    return out;
}

enum class ParseStatus { ok, sync_error, crc_error };

struct ParseResult {
    ParseStatus status = ParseStatus::sync_error;
    Frame frame;
    bool ok() const { return status == ParseStatus::ok; }
};

inline ParseResult parse_frame(const Bits& b, size_t offset = 0) {
    if (b.size() < offset + kFrameBits)
        throw std::invalid_argument("parse_frame: need at least 280 bits");
    ParseResult r;
    const Bits pre = preamble_bits();
    for (size_t i = 0; i < kPreambleBits; ++i) {
        if (b[offset + i] != pre[i]) {
            r.status = ParseStatus::sync_error;
            return r;
        }
    }
    r.frame.payload.assign(b.begin() + offset + kPreambleBits,
                           b.begin() + offset + kPreambleBits + kPayloadBits);
    uint16_t rx_crc = 0;
    for (size_t i = 0; i < kCrcBits; ++i)
        rx_crc = uint16_t((rx_crc << 1) | b[offset + kPreambleBits + kPayloadBits + i]);
    r.frame.crc = rx_crc;
    r.status = (compute_crc16(r.frame.payload) == rx_crc) ? ParseStatus::ok
                                                          : ParseStatus::crc_error;
    return r;
}

}  // namespace ledlink
