#pragma once

#include "roomnav/gridworld.hpp"
#include "roomnav/scene_rep.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace roomnav::test {

inline std::string fixture_path(const std::string& name) { return std::string(ROOMNAV_FIXTURE_DIR) + "/" + name; }

struct ObjectDef {
    std::string category;
    std::vector<int> rect;  // x0, y0, x1, y1
    std::map<std::string, std::string> attributes{};
    bool solid = true;      // marks its cells Occupied
};

/// Single-room world from ASCII rows ('.' free, '#' occupied). Row 0 is y = 0.
inline World make_world(const std::vector<std::string>& rows, const std::vector<ObjectDef>& objects = {},
                        double resolution = 0.1, const std::string& label = "living_room") {
    std::vector<std::string> grid = rows;
    nlohmann::json objs = nlohmann::json::array();
    int id = 0;
    for (const auto& o : objects) {
        if (o.solid)
            for (int y = o.rect[1]; y <= o.rect[3]; ++y)
                for (int x = o.rect[0]; x <= o.rect[2]; ++x) grid[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] = '#';
        objs.push_back({{"id", id++}, {"category", o.category}, {"attributes", o.attributes}, {"cells", {o.rect}}});
    }
    const int w = static_cast<int>(rows[0].size()), h = static_cast<int>(rows.size());
    nlohmann::json doc = {{"format", 1},
                          {"resolution", resolution},
                          {"grid", grid},
                          {"rooms", {{{"id", 0}, {"label", label}, {"cells", {{0, 0, w - 1, h - 1}}}}}},
                          {"doors", nlohmann::json::array()},
                          {"objects", objs}};
    return world_from_json(doc);
}

/// Unvalidated world straight from ASCII rows; every free cell is room 0.
inline World raw_world(const std::vector<std::string>& rows, const std::vector<ObjectDef>& objects = {},
                       double resolution = 0.1) {
    GridMap map;
    map.resolution = resolution;
    const int w = static_cast<int>(rows[0].size()), h = static_cast<int>(rows.size());
    map.cells = Grid<CellLabel>(w, h, CellLabel::Free);
    map.rooms_gt = Grid<int>(w, h, 0);
    auto block = [&](Cell c) {
        map.cells[c] = CellLabel::Occupied;
        map.rooms_gt[c] = -1;
    };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] == '#') block({x, y});
    std::vector<ObjectInstance> objs;
    for (const auto& o : objects) {
        ObjectInstance inst;
        inst.id = static_cast<int>(objs.size());
        inst.category = o.category;
        inst.attributes = o.attributes;
        inst.room_id = 0;
        for (int y = o.rect[1]; y <= o.rect[3]; ++y)
            for (int x = o.rect[0]; x <= o.rect[2]; ++x) {
                inst.footprint.push_back({x, y});
                if (o.solid) block({x, y});
            }
        objs.push_back(std::move(inst));
    }
    map.rooms.push_back({0, "living_room"});
    return World(std::move(map), std::move(objs));
}

/// Walled rectangle with a free interior of w x h cells.
inline std::vector<std::string> box_rows(int w, int h) {
    std::vector<std::string> rows(static_cast<std::size_t>(h + 2), std::string(static_cast<std::size_t>(w + 2), '#'));
    for (int y = 1; y <= h; ++y)
        for (int x = 1; x <= w; ++x) rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] = '.';
    return rows;
}

/// Closed box of cell `b` expanded by `eps` intersects segment a-c (grid units).
inline bool segment_touches_cell(const Vec2& a, const Vec2& c, Cell b, double eps = 1e-9) {
    double t0 = 0.0, t1 = 1.0;
    const double lo[2] = {b.x - eps, b.y - eps};
    const double hi[2] = {b.x + 1.0 + eps, b.y + 1.0 + eps};
    const double p[2] = {a.x(), a.y()};
    const double d[2] = {c.x() - a.x(), c.y() - a.y()};
    for (int k = 0; k < 2; ++k) {
        if (std::abs(d[k]) < 1e-15) {
            if (p[k] < lo[k] || p[k] > hi[k]) return false;
            continue;
        }
        double ta = (lo[k] - p[k]) / d[k], tb = (hi[k] - p[k]) / d[k];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return false;
    }
    return true;
}

/// Brute-force visibility: every cell whose centre is within range and whose
/// sight segment touches no blocking cell other than itself.
inline Mask brute_force_visible(const World& world, const Pose& pose, double range_m) {
    const GridMap& map = world.map();
    const double res = map.resolution;
    const Vec2 from = pose.position() / res;
    Mask vis(map.width(), map.height(), 0);
    for (int y = 0; y < map.height(); ++y)
        for (int x = 0; x < map.width(); ++x) {
            const Cell c{x, y};
            const Vec2 to{x + 0.5, y + 0.5};
            if ((to - from).norm() > range_m / res + 1e-9) continue;
            bool clear = true;
            const int bx0 = static_cast<int>(std::floor(std::min(from.x(), to.x()))) - 1;
            const int bx1 = static_cast<int>(std::floor(std::max(from.x(), to.x()))) + 1;
            const int by0 = static_cast<int>(std::floor(std::min(from.y(), to.y()))) - 1;
            const int by1 = static_cast<int>(std::floor(std::max(from.y(), to.y()))) + 1;
            for (int by = by0; by <= by1 && clear; ++by)
                for (int bx = bx0; bx <= bx1 && clear; ++bx) {
                    const Cell b{bx, by};
                    if (b == c || map.free(b)) continue;
                    if (segment_touches_cell(from, to, b)) clear = false;
                }
            if (clear) vis[c] = 1;
        }
    return vis;
}

/// Plain Dijkstra over 8-connected passable cells without corner cutting, in cells.
inline double dijkstra_cells(const Mask& passable, Cell start, Cell goal) {
    Grid<double> dist(passable.width(), passable.height(), kInf);
    std::vector<std::pair<double, Cell>> open{{0.0, start}};
    dist[start] = 0.0;
    while (!open.empty()) {
        auto it = std::min_element(open.begin(), open.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        const auto [d, c] = *it;
        open.erase(it);
        if (d > dist[c]) continue;
        if (c == goal) return d;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (!dx && !dy) continue;
                const Cell n{c.x + dx, c.y + dy};
                if (!passable.in_bounds(n) || !passable[n]) continue;
                if (dx && dy && (!passable[Cell{c.x + dx, c.y}] || !passable[Cell{c.x, c.y + dy}])) continue;
                const double nd = d + ((dx && dy) ? std::sqrt(2.0) : 1.0);
                if (nd < dist[n] - 1e-12) {
                    dist[n] = nd;
                    open.push_back({nd, n});
                }
            }
    }
    return kInf;
}

/// Observes every cell and every object of the world at once.
inline Observation full_observation(const World& world) {
    Observation obs;
    for (int y = 0; y < world.map().height(); ++y)
        for (int x = 0; x < world.map().width(); ++x)
            obs.visible.push_back({{x, y}, world.map().cells[Cell{x, y}]});
    for (const auto& o : world.objects()) obs.detections.push_back({o.category, 1.0, o.footprint, o.id});
    return obs;
}

inline void observe_everything(SceneRep& rep, const World& world) { rep.integrate_observation(full_observation(world)); }

/// Forwards to another reasoner and counts calls per variant.
class CountingReasoner final : public Reasoner {
public:
    explicit CountingReasoner(Reasoner& inner) : inner_(inner) {}

    bool decide_early_stop(const EarlyStopContext& c) override { return ++early_stop, inner_.decide_early_stop(c); }
    RoomChoice select_room(const RoomQueryContext& c) override { return ++room_query, inner_.select_room(c); }
    std::string classify_room(const RoomLabelContext& c) override { return ++room_label, inner_.classify_room(c); }
    std::optional<std::string> infer_attribute(const AttributeContext& c) override {
        return ++attribute, inner_.infer_attribute(c);
    }
    Verdict check_relation(const RelationContext& c) override { return ++relation, inner_.check_relation(c); }

    int total() const { return early_stop + room_query + room_label + attribute + relation; }

    int early_stop = 0, room_query = 0, room_label = 0, attribute = 0, relation = 0;

private:
    Reasoner& inner_;
};

}  // namespace roomnav::test
