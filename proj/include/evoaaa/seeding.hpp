#pragma once

#include <cstdint>

namespace evoaaa {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives an independent stream seed from a parent seed and a salt.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t salt) {
    return splitmix64(parent ^ splitmix64(salt + 0x632be59bd9b4e019ULL));
}

} // namespace evoaaa
