#pragma once

#include <cstdint>
#include <initializer_list>

namespace gearsim {

// splitmix64 finalizer; used to derive independent stream seeds from a
// master seed so that parallel work stays order-independent.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> stream) {
    std::uint64_t s = mix_seed(master);
    for (std::uint64_t v : stream) s = mix_seed(s ^ mix_seed(v + 0x632be59bd9b4e019ULL));
    return s;
}

// FNV-1a over raw bytes.
inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace gearsim
