#pragma once

#include "roomnav/core.hpp"

#include <limits>
#include <optional>
#include <vector>

namespace roomnav {

/// 8-connected moves with sqrt(2) diagonal cost. A diagonal move is allowed only
/// when both orthogonal neighbours are passable (no corner cutting).
struct GridPath {
    std::vector<Cell> cells;  // start .. goal inclusive
    double cost = 0.0;        // in cells
};

/// Distance field (in cells) from a set of sources over `passable`. Sources are
/// expanded even if not passable themselves. Stops once `max_cost` is exceeded.
Grid<double> distance_field(const Mask& passable, const std::vector<Cell>& sources,
                            double max_cost = kInf);

/// Cheapest path from `start` to any cell flagged in `goals`.
std::optional<GridPath> search_to_any(const Mask& passable, Cell start, const Mask& goals);

/// A* between two cells with the octile heuristic.
std::optional<GridPath> astar(const Mask& passable, Cell start, Cell goal);

/// Walks a distance field downhill from `from` back to a source.
std::vector<Cell> descend(const Grid<double>& field, const Mask& passable, Cell from);

}  // namespace roomnav
