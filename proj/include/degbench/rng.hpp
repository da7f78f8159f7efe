#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace degbench {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Seed for a sub-job identified by a list of coordinates. Depends only on the
// values, never on scheduling order.
template <typename... Coords>
constexpr std::uint64_t derive_seed(std::uint64_t base, Coords... coords) noexcept {
    std::uint64_t h = mix64(base);
    ((h = mix64(h ^ static_cast<std::uint64_t>(coords))), ...);
    return h;
}

// Fisher-Yates with an explicit bounded draw so the permutation depends only
// on the engine stream.
template <typename T>
void shuffle_in_place(std::span<T> values, Rng& rng) {
    for (std::size_t i = values.size(); i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(values[i - 1], values[pick(rng)]);
    }
}

}  // namespace degbench
