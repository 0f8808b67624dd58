#include "roomnav/grid_search.hpp"

#include <algorithm>
#include <array>
#include <queue>

namespace roomnav {
namespace {

struct Move {
    int dx;
    int dy;
    double cost;
};

constexpr std::array<Move, 8> kMoves{{{1, 0, 1.0},
                                      {-1, 0, 1.0},
                                      {0, 1, 1.0},
                                      {0, -1, 1.0},
                                      {1, 1, kSqrt2},
                                      {1, -1, kSqrt2},
                                      {-1, 1, kSqrt2},
                                      {-1, -1, kSqrt2}}};

bool passable_at(const Mask& m, Cell c) { return m.in_bounds(c) && m[c] != 0; }

bool move_allowed(const Mask& passable, Cell from, const Move& mv) {
    const Cell to{from.x + mv.dx, from.y + mv.dy};
    if (!passable_at(passable, to)) return false;
    if (mv.dx != 0 && mv.dy != 0) {
        if (!passable_at(passable, {from.x + mv.dx, from.y}) ||
            !passable_at(passable, {from.x, from.y + mv.dy}))
            return false;
    }
    return true;
}

struct QueueEntry {
    double priority;
    double cost;
    int index;
    bool operator>(const QueueEntry& o) const {
        if (priority != o.priority) return priority > o.priority;
        return index > o.index;
    }
};

using MinQueue = std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>>;

std::vector<Cell> unwind(const Mask& passable, const std::vector<int>& parent, int goal) {
    std::vector<Cell> cells;
    for (int i = goal; i >= 0; i = parent[static_cast<std::size_t>(i)])
        cells.push_back(passable.cell(i));
    std::reverse(cells.begin(), cells.end());
    return cells;
}

}  // namespace

Grid<double> distance_field(const Mask& passable, const std::vector<Cell>& sources, double max_cost) {
    Grid<double> dist(passable.width(), passable.height(), kInf);
    MinQueue open;
    for (const Cell& s : sources) {
        if (!dist.in_bounds(s)) continue;
        dist[s] = 0.0;
        open.push({0.0, 0.0, dist.index(s)});
    }
    while (!open.empty()) {
        const QueueEntry top = open.top();
        open.pop();
        if (top.cost > dist[top.index]) continue;
        if (top.cost > max_cost) break;
        const Cell c = dist.cell(top.index);
        for (const Move& mv : kMoves) {
            if (!move_allowed(passable, c, mv)) continue;
            const Cell n{c.x + mv.dx, c.y + mv.dy};
            const double nc = top.cost + mv.cost;
            if (nc < dist[n]) {
                dist[n] = nc;
                open.push({nc, nc, dist.index(n)});
            }
        }
    }
    return dist;
}

std::optional<GridPath> search_to_any(const Mask& passable, Cell start, const Mask& goals) {
    if (!passable.in_bounds(start)) return std::nullopt;
    std::vector<double> dist(static_cast<std::size_t>(passable.size()), kInf);
    std::vector<int> parent(static_cast<std::size_t>(passable.size()), -1);
    MinQueue open;
    const int s = passable.index(start);
    dist[static_cast<std::size_t>(s)] = 0.0;
    open.push({0.0, 0.0, s});
    while (!open.empty()) {
        const QueueEntry top = open.top();
        open.pop();
        if (top.cost > dist[static_cast<std::size_t>(top.index)]) continue;
        if (goals[top.index]) return GridPath{unwind(passable, parent, top.index), top.cost};
        const Cell c = passable.cell(top.index);
        for (const Move& mv : kMoves) {
            if (!move_allowed(passable, c, mv)) continue;
            const int n = passable.index({c.x + mv.dx, c.y + mv.dy});
            const double nc = top.cost + mv.cost;
            if (nc < dist[static_cast<std::size_t>(n)]) {
                dist[static_cast<std::size_t>(n)] = nc;
                parent[static_cast<std::size_t>(n)] = top.index;
                open.push({nc, nc, n});
            }
        }
    }
    return std::nullopt;
}

std::optional<GridPath> astar(const Mask& passable, Cell start, Cell goal) {
    if (!passable.in_bounds(start) || !passable.in_bounds(goal)) return std::nullopt;
    if (start == goal) return GridPath{{start}, 0.0};
    if (!passable[goal]) return std::nullopt;
    auto heuristic = [&](Cell c) {
        const double dx = std::abs(c.x - goal.x);
        const double dy = std::abs(c.y - goal.y);
        return std::max(dx, dy) + (kSqrt2 - 1.0) * std::min(dx, dy);
    };
    std::vector<double> dist(static_cast<std::size_t>(passable.size()), kInf);
    std::vector<int> parent(static_cast<std::size_t>(passable.size()), -1);
    MinQueue open;
    const int s = passable.index(start);
    const int g = passable.index(goal);
    dist[static_cast<std::size_t>(s)] = 0.0;
    open.push({heuristic(start), 0.0, s});
    while (!open.empty()) {
        const QueueEntry top = open.top();
        open.pop();
        if (top.cost > dist[static_cast<std::size_t>(top.index)]) continue;
        if (top.index == g) return GridPath{unwind(passable, parent, g), top.cost};
        const Cell c = passable.cell(top.index);
        for (const Move& mv : kMoves) {
            if (!move_allowed(passable, c, mv)) continue;
            const Cell nc_cell{c.x + mv.dx, c.y + mv.dy};
            const int n = passable.index(nc_cell);
            const double nc = top.cost + mv.cost;
            if (nc < dist[static_cast<std::size_t>(n)]) {
                dist[static_cast<std::size_t>(n)] = nc;
                parent[static_cast<std::size_t>(n)] = top.index;
                open.push({nc + heuristic(nc_cell), nc, n});
            }
        }
    }
    return std::nullopt;
}

std::vector<Cell> descend(const Grid<double>& field, const Mask& passable, Cell from) {
    std::vector<Cell> cells{from};
    if (!field.in_bounds(from) || field[from] == kInf) return {};
    Cell c = from;
    while (field[c] > 0.0) {
        Cell best = c;
        double best_val = field[c];
        for (const Move& mv : kMoves) {
            const Cell n{c.x + mv.dx, c.y + mv.dy};
            if (!field.in_bounds(n) || field[n] == kInf) continue;
            // Reverse move validity: the field was grown from n towards c.
            if (mv.dx != 0 && mv.dy != 0 &&
                (!passable_at(passable, {c.x + mv.dx, c.y}) || !passable_at(passable, {c.x, c.y + mv.dy})))
                continue;
            if (field[n] + mv.cost <= field[c] + 1e-9 && field[n] < best_val) {
                best = n;
                best_val = field[n];
            }
        }
        if (best == c) break;
        c = best;
        cells.push_back(c);
    }
    return cells;
}

}  // namespace roomnav
