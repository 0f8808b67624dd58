#pragma once

#include "roomnav/core.hpp"

namespace roomnav {

/// Tolerance (grid units) used when a segment grazes a cell boundary. Touching
/// counts as intersecting, so rays cannot slip between diagonal neighbours.
inline constexpr double kTouchEps = 1e-9;

/// Visits every cell whose closed box intersects the segment a-b, where both
/// endpoints are in grid units. Columns are walked from a towards b; the
/// visitor returns false to stop early. Returns false iff stopped.
template <typename Visitor>
bool walk_supercover(const Vec2& a, const Vec2& b, Visitor&& visit) {
    const double dx = b.x() - a.x();
    const double dy = b.y() - a.y();
    const double xmin = std::min(a.x(), b.x());
    const double xmax = std::max(a.x(), b.x());
    const int col_lo = static_cast<int>(std::ceil(xmin - kTouchEps)) - 1;
    const int col_hi = static_cast<int>(std::floor(xmax + kTouchEps));
    const bool vertical = std::abs(dx) < 1e-12;
    const int col_step = dx >= 0.0 ? 1 : -1;
    const int col_first = dx >= 0.0 ? col_lo : col_hi;
    const int col_last = dx >= 0.0 ? col_hi : col_lo;

    for (int col = col_first;; col += col_step) {
        double ylo;
        double yhi;
        if (vertical) {
            ylo = std::min(a.y(), b.y());
            yhi = std::max(a.y(), b.y());
        } else {
            const double x0 = std::clamp(static_cast<double>(col) - kTouchEps, xmin, xmax);
            const double x1 = std::clamp(static_cast<double>(col + 1) + kTouchEps, xmin, xmax);
            const double y0 = a.y() + dy * (x0 - a.x()) / dx;
            const double y1 = a.y() + dy * (x1 - a.x()) / dx;
            ylo = std::min(y0, y1);
            yhi = std::max(y0, y1);
        }
        const int row_lo = static_cast<int>(std::ceil(ylo - kTouchEps)) - 1;
        const int row_hi = static_cast<int>(std::floor(yhi + kTouchEps));
        // Walk rows toward b as well so early exits hit the nearest blocker.
        if (dy >= 0.0) {
            for (int row = row_lo; row <= row_hi; ++row)
                if (!visit(Cell{col, row})) return false;
        } else {
            for (int row = row_hi; row >= row_lo; --row)
                if (!visit(Cell{col, row})) return false;
        }
        if (col == col_last) break;
    }
    return true;
}

/// True iff no cell other than `target` that the segment from `from` (grid
/// units) to the centre of `target` touches satisfies `blocks`.
template <typename BlockFn>
bool line_of_sight(const Vec2& from, Cell target, BlockFn&& blocks) {
    return walk_supercover(from, grid_center(target), [&](Cell c) {
        return c == target || !blocks(c);
    });
}

}  // namespace roomnav
