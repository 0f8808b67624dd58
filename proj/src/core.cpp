#include "roomnav/core.hpp"

#include <limits>

namespace roomnav {

std::vector<Cell> disc_offsets(double radius_cells) {
    std::vector<Cell> offsets;
    const int r = static_cast<int>(std::floor(radius_cells + 1e-9));
    const double r2 = radius_cells * radius_cells + 1e-9;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            if (dx * dx + dy * dy <= r2) offsets.push_back({dx, dy});
    return offsets;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) {
    return splitmix64(seed ^ (splitmix64(value) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}

std::uint64_t hash_string(const std::string& s) {
    // FNV-1a, stable across platforms unlike std::hash.
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
    return Rng(hash_combine(splitmix64(seed), stream));
}

int uniform_int(Rng& rng, int lo, int hi) {
    if (hi <= lo) return lo;
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    // Rejection sampling keeps the draw unbiased and platform independent.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t r;
    do {
        r = rng();
    } while (r >= limit);
    return lo + static_cast<int>(r % span);
}

}  // namespace roomnav
