#pragma once

#include <cstdint>
#include <random>

#include "ledlink/bits.hpp"

namespace ledlink {

// splitmix64; used to derive independent per-trial seeds from one top seed.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t derive_seed(uint64_t top_seed, uint64_t stream_index) {
    uint64_t s = top_seed ^ (0xd1342543de82ef95ULL * (stream_index + 1));
    return splitmix64(s);
}

inline Bits random_bits(size_t n, uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::bernoulli_distribution coin(0.5);
    Bits out(n);
    for (auto& b : out) b = coin(gen) ? 1 : 0;
    return out;
}

}  // namespace ledlink
