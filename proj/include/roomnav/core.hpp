#pragma once

#include <Eigen/Core>

#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace roomnav {

using Vec2 = Eigen::Vector2d;

struct Cell {
    int x = 0;
    int y = 0;

    friend auto operator<=>(const Cell&, const Cell&) = default;
};

struct CellHash {
    std::size_t operator()(const Cell& c) const noexcept {
        return std::hash<std::int64_t>{}((static_cast<std::int64_t>(c.x) << 32) ^
                                         static_cast<std::uint32_t>(c.y));
    }
};

struct Pose {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;

    Vec2 position() const { return {x, y}; }
};

/// Row-major dense 2D grid.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(int width, int height, T fill = T{})
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    int size() const { return width_ * height_; }

    bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
    int index(Cell c) const { return c.y * width_ + c.x; }
    Cell cell(int index) const { return {index % width_, index / width_}; }

    T& operator[](Cell c) { return data_[static_cast<std::size_t>(index(c))]; }
    const T& operator[](Cell c) const { return data_[static_cast<std::size_t>(index(c))]; }
    T& operator[](int i) { return data_[static_cast<std::size_t>(i)]; }
    const T& operator[](int i) const { return data_[static_cast<std::size_t>(i)]; }

    void fill(T value) { std::fill(data_.begin(), data_.end(), value); }
    const std::vector<T>& data() const { return data_; }
    std::vector<T>& data() { return data_; }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using Mask = Grid<std::uint8_t>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double wrap_angle(double a) {
    a = std::fmod(a + kPi, 2.0 * kPi);
    if (a <= 0.0) a += 2.0 * kPi;
    return a - kPi;
}

/// Metric <-> grid conversion for a map of the given resolution (meters per cell).
inline Cell cell_at(const Vec2& p, double resolution) {
    return {static_cast<int>(std::floor(p.x() / resolution)),
            static_cast<int>(std::floor(p.y() / resolution))};
}
inline Vec2 cell_center(Cell c, double resolution) {
    return {(c.x + 0.5) * resolution, (c.y + 0.5) * resolution};
}
/// Cell center in grid units (one unit per cell).
inline Vec2 grid_center(Cell c) { return {c.x + 0.5, c.y + 0.5}; }

inline double cell_distance(Cell a, Cell b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

/// Offsets (dx, dy) with dx^2 + dy^2 <= radius_cells^2.
std::vector<Cell> disc_offsets(double radius_cells);

// ---------------------------------------------------------------------------
// Randomness. Everything stochastic goes through explicitly seeded streams so
// that runs are reproducible independent of thread scheduling.
// ---------------------------------------------------------------------------

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value);
std::uint64_t hash_string(const std::string& s);

/// Independent stream `stream` derived from `seed`.
Rng make_rng(std::uint64_t seed, std::uint64_t stream);

/// Uniform in [0, 1) with 53 random bits; identical on every platform.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }
/// Uniform integer in [lo, hi].
int uniform_int(Rng& rng, int lo, int hi);

/// Hash-derived uniform in [0, 1), for stateless seeded noise.
inline double hash_unit(std::uint64_t h) { return static_cast<double>(splitmix64(h) >> 11) * 0x1.0p-53; }

}  // namespace roomnav
