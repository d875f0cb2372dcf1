#include "unleak/rng.hpp"

namespace unleak {

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t n, std::size_t k) {
    // Partial Fisher-Yates over an index pool; O(n) space, O(k) swaps.
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + next_below(n - i);
        std::swap(pool[i], pool[j]);
        out.push_back(pool[i]);
    }
    return out;
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer over the concatenated stream tags.
    auto mix = [](std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(base + 0x9e3779b97f4a7c15ULL);
    h = mix(h ^ (a + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
    h = mix(h ^ (b + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
    return h;
}

}  // namespace unleak
