#pragma once

#include <cctype>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ledlink {

// A bit-string: one element per bit, each 0 or 1, index 0 transmitted first.
using Bits = std::vector<uint8_t>;

namespace bits {

inline Bits from_text(const std::string& text) {
    Bits out;
    out.reserve(text.size());
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        if (c == '0') out.push_back(0);
        else if (c == '1') out.push_back(1);
        else throw std::invalid_argument("bit text contains character other than 0/1");
    }
    return out;
}

inline std::string to_text(const Bits& b) {
    std::string s;
    s.reserve(b.size());
    for (uint8_t bit : b) s.push_back(bit ? '1' : '0');
    return s;
}

// MSB-first within each byte.
inline Bits from_bytes(const uint8_t* data, size_t n) {
    Bits out;
    out.reserve(n * 8);
    for (size_t i = 0; i < n; ++i)
        for (int k = 7; k >= 0; --k)
            out.push_back((data[i] >> k) & 1u);
    return out;
}

inline Bits from_bytes(const std::vector<uint8_t>& v) {
    return from_bytes(v.data(), v.size());
}

inline Bits from_ascii(const std::string& s) {
    return from_bytes(reinterpret_cast<const uint8_t*>(s.data()), s.size());
}

// Packs MSB-first; a final partial byte is zero-padded in its low bits.
inline std::vector<uint8_t> pack(const Bits& b) {
    std::vector<uint8_t> out((b.size() + 7) / 8, 0);
    for (size_t i = 0; i < b.size(); ++i)
        if (b[i]) out[i / 8] |= uint8_t(1u << (7 - (i % 8)));
    return out;
}

inline Bits unpack(const std::vector<uint8_t>& bytes, size_t nbits) {
    if (nbits > bytes.size() * 8)
        throw std::invalid_argument("unpack: nbits exceeds available bytes");
    Bits out;
    out.reserve(nbits);
    for (size_t i = 0; i < nbits; ++i)
        out.push_back((bytes[i / 8] >> (7 - (i % 8))) & 1u);
    return out;
}

}  // namespace bits
}  // namespace ledlink
