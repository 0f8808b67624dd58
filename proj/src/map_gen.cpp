#include "roomnav/map_gen.hpp"

#include "roomnav/grid_search.hpp"
#include "roomnav/visibility.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace roomnav {

using nlohmann::json;

namespace {

const std::vector<std::string> kColors{"red", "blue", "green", "white", "black", "brown"};

struct Rect {
    int x0, y0, x1, y1;  // inclusive

    bool contains(Cell c) const { return c.x >= x0 && c.x <= x1 && c.y >= y0 && c.y <= y1; }
    Rect expanded(int d) const { return {x0 - d, y0 - d, x1 + d, y1 + d}; }
    Rect merged(const Rect& o) const {
        return {std::min(x0, o.x0), std::min(y0, o.y0), std::max(x1, o.x1), std::max(y1, o.y1)};
    }
    bool inside(const Rect& o) const { return x0 >= o.x0 && y0 >= o.y0 && x1 <= o.x1 && y1 <= o.y1; }
    std::vector<Cell> cells() const {
        std::vector<Cell> out;
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) out.push_back({x, y});
        return out;
    }
};

template <typename T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i)
        std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(uniform_int(rng, 0, i))]);
}

int find_root(std::vector<int>& parent, int i) {
    while (parent[static_cast<std::size_t>(i)] != i) i = parent[static_cast<std::size_t>(i)];
    return i;
}

/// Mutable state while furnishing a layout.
class Furnisher {
public:
    Furnisher(GridMap& map, const std::vector<Rect>& interiors, const Mask& door_mask, const GenParams& params, Rng& rng)
        : map_(map), interiors_(interiors), door_mask_(door_mask), params_(params), rng_(rng),
          object_mask_(map.width(), map.height(), 0) {
        clear_ = static_cast<int>(std::ceil(params.clearance / params.resolution - 1e-9));
        door_clear_ = static_cast<int>(std::ceil(params.door_clear / params.resolution - 1e-9));
    }

    Rect sized_rect(const std::string& category) {
        auto [a, b] = object_size(category);
        int w = std::max(1, static_cast<int>(std::lround(a / params_.resolution)));
        int h = std::max(1, static_cast<int>(std::lround(b / params_.resolution)));
        if (uniform01(rng_) < 0.5) std::swap(w, h);
        return {0, 0, w - 1, h - 1};
    }

    /// Tries to place `cluster` (rects relative to the origin) inside room `r`.
    std::optional<Cell> find_spot(int r, const std::vector<Rect>& cluster, int attempts) {
        Rect bounds = cluster.front();
        for (const Rect& c : cluster) bounds = bounds.merged(c);
        const Rect& in = interiors_[static_cast<std::size_t>(r)];
        const int lo_x = in.x0 + clear_ - bounds.x0, hi_x = in.x1 - clear_ - bounds.x1;
        const int lo_y = in.y0 + clear_ - bounds.y0, hi_y = in.y1 - clear_ - bounds.y1;
        if (hi_x < lo_x || hi_y < lo_y) return std::nullopt;
        for (int k = 0; k < attempts; ++k) {
            const Cell off{uniform_int(rng_, lo_x, hi_x), uniform_int(rng_, lo_y, hi_y)};
            const Rect placed{bounds.x0 + off.x, bounds.y0 + off.y, bounds.x1 + off.x, bounds.y1 + off.y};
            if (region_clear(placed)) return off;
        }
        return std::nullopt;
    }

    int add(int r, const std::string& category, std::map<std::string, std::string> attributes, const Rect& rect) {
        ObjectInstance obj;
        obj.id = static_cast<int>(objects_.size());
        obj.category = category;
        obj.attributes = std::move(attributes);
        obj.footprint = rect.cells();
        obj.room_id = r;
        for (const Cell& c : obj.footprint) {
            map_.cells[c] = CellLabel::Occupied;
            map_.rooms_gt[c] = -1;
            object_mask_[c] = 1;
        }
        objects_.push_back(std::move(obj));
        return objects_.back().id;
    }

    std::map<std::string, std::string> random_attributes() {
        return {{"color", kColors[static_cast<std::size_t>(uniform_int(rng_, 0, static_cast<int>(kColors.size()) - 1))]}};
    }

    std::vector<ObjectInstance>& objects() { return objects_; }

private:
    bool region_clear(const Rect& placed) const {
        const Rect gap = placed.expanded(clear_);
        for (int y = gap.y0; y <= gap.y1; ++y)
            for (int x = gap.x0; x <= gap.x1; ++x)
                if (object_mask_.in_bounds({x, y}) && object_mask_[{x, y}]) return false;
        const Rect door_gap = placed.expanded(door_clear_);
        for (int y = door_gap.y0; y <= door_gap.y1; ++y)
            for (int x = door_gap.x0; x <= door_gap.x1; ++x) {
                if (!door_mask_.in_bounds({x, y}) || !door_mask_[{x, y}]) continue;
                // Door cells are compared by center distance to the rectangle.
                const int dx = std::max({placed.x0 - x, 0, x - placed.x1});
                const int dy = std::max({placed.y0 - y, 0, y - placed.y1});
                if (std::hypot(dx, dy) * params_.resolution < params_.door_clear) return false;
            }
        return true;
    }

    GridMap& map_;
    const std::vector<Rect>& interiors_;
    const Mask& door_mask_;
    const GenParams& params_;
    Rng& rng_;
    Mask object_mask_;
    std::vector<ObjectInstance> objects_;
    int clear_ = 8;
    int door_clear_ = 10;
};

int pick_room(const PlantSpec& plant, const std::vector<RoomInfo>& rooms, const PriorsTable& priors, Rng& rng) {
    if (!plant.room_label.empty()) {
        for (const auto& r : rooms)
            if (r.label == plant.room_label) return r.id;
        throw GenError("plant '" + plant.category + "': no room labelled '" + plant.room_label + "'");
    }
    int best = 0;
    double best_w = -1.0;
    for (const auto& r : rooms) {
        const double w = priors.prior(plant.category, r.label);
        if (w > best_w) {
            best_w = w;
            best = r.id;
        }
    }
    if (!plant.avoid_best_room || rooms.size() < 2) return best;
    std::vector<int> others;
    for (const auto& r : rooms)
        if (r.id != best) others.push_back(r.id);
    return others[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(others.size()) - 1))];
}

}  // namespace

std::pair<double, double> object_size(const std::string& category) {
    static const std::map<std::string, std::pair<double, double>> sizes{
        {"refrigerator", {0.8, 0.7}}, {"microwave", {0.5, 0.4}},   {"oven", {0.6, 0.6}},
        {"sink", {0.6, 0.5}},         {"toilet", {0.7, 0.5}},      {"bathtub", {1.6, 0.8}},
        {"bed", {2.0, 1.6}},          {"nightstand", {0.5, 0.5}},  {"wardrobe", {1.2, 0.6}},
        {"sofa", {2.0, 0.9}},         {"tv", {1.2, 0.3}},          {"armchair", {0.8, 0.8}},
        {"dining_table", {1.6, 0.9}}, {"chair", {0.5, 0.5}},       {"desk", {1.2, 0.7}},
        {"computer", {0.5, 0.4}},     {"bookshelf", {1.0, 0.4}},   {"washing_machine", {0.6, 0.6}},
        {"plant", {0.4, 0.4}},        {"cup", {0.2, 0.2}},         {"table", {1.2, 0.8}},
        {"shoe_rack", {0.8, 0.4}},
    };
    auto it = sizes.find(category);
    return it == sizes.end() ? std::pair{0.6, 0.6} : it->second;
}

GenParams GenParams::from_json(const json& j) {
    GenParams p;
    p.rooms_x = j.value("rooms_x", p.rooms_x);
    p.rooms_y = j.value("rooms_y", p.rooms_y);
    if (j.contains("room_size_range")) {
        const auto r = j.at("room_size_range").get<std::vector<double>>();
        if (r.size() != 2) throw std::invalid_argument("gen params: room_size_range must be [min, max]");
        p.room_size_min = r[0];
        p.room_size_max = r[1];
    }
    p.door_width = j.value("door_width", p.door_width);
    p.object_density = j.value("object_density", p.object_density);
    p.resolution = j.value("resolution", p.resolution);
    p.wall_cells = j.value("wall_cells", p.wall_cells);
    p.clearance = j.value("clearance", p.clearance);
    p.door_clear = j.value("door_clear", p.door_clear);
    if (j.contains("room_labels")) p.room_labels = j.at("room_labels").get<std::vector<std::string>>();
    if (j.contains("exclude_categories"))
        p.exclude_categories = j.at("exclude_categories").get<std::set<std::string>>();
    if (j.contains("plants")) {
        for (const auto& pj : j.at("plants")) {
            PlantSpec ps;
            ps.category = pj.at("category").get<std::string>();
            if (pj.contains("attributes")) ps.attributes = pj.at("attributes").get<std::map<std::string, std::string>>();
            ps.room_label = pj.value("room", std::string{});
            ps.anchor_relation = pj.value("anchor_relation", std::string{});
            ps.anchor_category = pj.value("anchor_category", std::string{});
            ps.avoid_best_room = pj.value("avoid_best_room", false);
            p.plants.push_back(std::move(ps));
        }
    }
    return p;
}

json GenParams::to_json() const {
    json plants_j = json::array();
    for (const auto& ps : plants)
        plants_j.push_back({{"category", ps.category},
                            {"attributes", ps.attributes},
                            {"room", ps.room_label},
                            {"anchor_relation", ps.anchor_relation},
                            {"anchor_category", ps.anchor_category},
                            {"avoid_best_room", ps.avoid_best_room}});
    return {{"rooms_x", rooms_x},
            {"rooms_y", rooms_y},
            {"room_size_range", {room_size_min, room_size_max}},
            {"door_width", door_width},
            {"object_density", object_density},
            {"resolution", resolution},
            {"wall_cells", wall_cells},
            {"clearance", clearance},
            {"door_clear", door_clear},
            {"room_labels", room_labels},
            {"exclude_categories", exclude_categories},
            {"plants", plants_j}};
}

GeneratedMap generate_map(std::uint64_t seed, const GenParams& params, const PriorsTable& priors) {
    if (params.rooms_x < 1 || params.rooms_y < 1) throw GenError("rooms_x and rooms_y must be positive");
    if (!(params.resolution > 0.0) || !(params.room_size_min > 0.0) || params.room_size_max < params.room_size_min)
        throw GenError("room_size_range must be positive and ordered, resolution positive");
    if (!(params.door_width > 0.0) || params.wall_cells < 1 || params.object_density < 0.0)
        throw GenError("door_width and wall_cells must be positive, object_density non-negative");
    priors.require_normalized();

    Rng rng = make_rng(seed, 0x6d6170);  // "map"
    const double res = params.resolution;
    const int wall = params.wall_cells;
    const int nx = params.rooms_x, ny = params.rooms_y, n_rooms = nx * ny;
    const int door_cells = std::max(1, static_cast<int>(std::lround(params.door_width / res)));
    const int corner_margin = static_cast<int>(std::ceil(0.3 / res));

    auto draw_side = [&] {
        return static_cast<int>(std::lround(uniform(rng, params.room_size_min, params.room_size_max) / res));
    };
    std::vector<int> col_w(static_cast<std::size_t>(nx)), row_h(static_cast<std::size_t>(ny));
    for (auto& w : col_w) w = draw_side();
    for (auto& h : row_h) h = draw_side();
    const int min_side = std::min(*std::min_element(col_w.begin(), col_w.end()), *std::min_element(row_h.begin(), row_h.end()));
    if (n_rooms > 1 && door_cells + 2 * corner_margin > min_side)
        throw GenError("room too small for door: side " + std::to_string(min_side * res) + " m, door " +
                       std::to_string(params.door_width) + " m");

    std::vector<int> x0(static_cast<std::size_t>(nx)), y0(static_cast<std::size_t>(ny));
    int acc = wall;
    for (int i = 0; i < nx; ++i) {
        x0[static_cast<std::size_t>(i)] = acc;
        acc += col_w[static_cast<std::size_t>(i)] + wall;
    }
    const int width = acc;
    acc = wall;
    for (int j = 0; j < ny; ++j) {
        y0[static_cast<std::size_t>(j)] = acc;
        acc += row_h[static_cast<std::size_t>(j)] + wall;
    }
    const int height = acc;

    GridMap map;
    map.resolution = res;
    map.cells = Grid<CellLabel>(width, height, CellLabel::Occupied);
    map.rooms_gt = Grid<int>(width, height, -1);

    std::vector<std::string> labels = params.room_labels;
    if (labels.empty()) {
        std::vector<std::string> pool;
        while (static_cast<int>(labels.size()) < n_rooms) {
            if (pool.empty()) {
                pool = priors.room_categories();
                shuffle_in_place(pool, rng);
            }
            labels.push_back(pool.back());
            pool.pop_back();
        }
    } else if (static_cast<int>(labels.size()) != n_rooms) {
        throw GenError("room_labels has " + std::to_string(labels.size()) + " entries, layout has " +
                       std::to_string(n_rooms) + " rooms");
    }

    std::vector<Rect> interiors;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const int id = j * nx + i;
            const Rect r{x0[static_cast<std::size_t>(i)], y0[static_cast<std::size_t>(j)],
                         x0[static_cast<std::size_t>(i)] + col_w[static_cast<std::size_t>(i)] - 1,
                         y0[static_cast<std::size_t>(j)] + row_h[static_cast<std::size_t>(j)] - 1};
            for (const Cell& c : r.cells()) {
                map.cells[c] = CellLabel::Free;
                map.rooms_gt[c] = id;
            }
            interiors.push_back(r);
            map.rooms.push_back({id, labels[static_cast<std::size_t>(id)]});
        }

    // Doors along a random spanning tree of the room adjacency grid.
    struct Edge {
        int a, b;
        bool horizontal;
    };
    std::vector<Edge> edges;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            if (i + 1 < nx) edges.push_back({j * nx + i, j * nx + i + 1, true});
            if (j + 1 < ny) edges.push_back({j * nx + i, (j + 1) * nx + i, false});
        }
    shuffle_in_place(edges, rng);
    std::vector<int> parent(static_cast<std::size_t>(n_rooms));
    std::iota(parent.begin(), parent.end(), 0);
    Mask door_mask(width, height, 0);
    for (const Edge& e : edges) {
        const int ra = find_root(parent, e.a), rb = find_root(parent, e.b);
        if (ra == rb) continue;
        parent[static_cast<std::size_t>(ra)] = rb;
        const Rect& A = interiors[static_cast<std::size_t>(e.a)];
        const Rect& B = interiors[static_cast<std::size_t>(e.b)];
        Door door;
        door.id = static_cast<int>(map.doors.size());
        door.rooms = {e.a, e.b};
        if (e.horizontal) {
            const int lo = A.y0 + corner_margin, hi = A.y1 - corner_margin - door_cells + 1;
            const int ys = uniform_int(rng, lo, hi);
            for (int x = A.x1 + 1; x < B.x0; ++x)
                for (int y = ys; y < ys + door_cells; ++y) {
                    door.cells.push_back({x, y});
                    map.rooms_gt[{x, y}] = (x - A.x1 <= wall / 2 || wall == 1) ? e.a : e.b;
                }
        } else {
            const int lo = A.x0 + corner_margin, hi = A.x1 - corner_margin - door_cells + 1;
            const int xs = uniform_int(rng, lo, hi);
            for (int y = A.y1 + 1; y < B.y0; ++y)
                for (int x = xs; x < xs + door_cells; ++x) {
                    door.cells.push_back({x, y});
                    map.rooms_gt[{x, y}] = (y - A.y1 <= wall / 2 || wall == 1) ? e.a : e.b;
                }
        }
        for (const Cell& c : door.cells) {
            map.cells[c] = CellLabel::Free;
            door_mask[c] = 1;
        }
        map.doors.push_back(std::move(door));
    }

    Furnisher furnish(map, interiors, door_mask, params, rng);
    GeneratedMap out;

    for (const PlantSpec& plant : params.plants) {
        const int r = pick_room(plant, map.rooms, priors, rng);
        Rect main_rect = furnish.sized_rect(plant.category);
        std::vector<Rect> cluster;
        std::optional<Rect> anchor_rect;
        if (!plant.anchor_relation.empty()) {
            Rect a = furnish.sized_rect(plant.anchor_category);
            const int mw = main_rect.x1 + 1, mh = main_rect.y1 + 1;
            const int aw = a.x1 + 1, ah = a.y1 + 1;
            const int side = uniform_int(rng, 0, 3);
            if (plant.anchor_relation == "on") {
                if (mw > aw || mh > ah) throw GenError("plant '" + plant.category + "' larger than its anchor");
                // Sits on one edge of the anchor so it stays visible from outside.
                const int px = uniform_int(rng, 0, aw - mw), py = uniform_int(rng, 0, ah - mh);
                Cell o = side == 0 ? Cell{px, 0} : side == 1 ? Cell{px, ah - mh} : side == 2 ? Cell{0, py} : Cell{aw - mw, py};
                main_rect = {o.x, o.y, o.x + mw - 1, o.y + mh - 1};
            } else if (plant.anchor_relation == "near") {
                const int gap = std::max(1, static_cast<int>(std::lround(0.2 / res)));
                const int cx = (aw - mw) / 2, cy = (ah - mh) / 2;
                Cell o = side == 0 ? Cell{aw + gap, cy} : side == 1 ? Cell{-mw - gap, cy}
                       : side == 2 ? Cell{cx, ah + gap} : Cell{cx, -mh - gap};
                main_rect = {o.x, o.y, o.x + mw - 1, o.y + mh - 1};
            } else {
                throw GenError("unsupported anchor relation '" + plant.anchor_relation + "'");
            }
            anchor_rect = a;
            cluster.push_back(a);
        }
        cluster.push_back(main_rect);
        const auto spot = furnish.find_spot(r, cluster, 400);
        if (!spot) throw GenError("could not place planted '" + plant.category + "' in room " + std::to_string(r));
        auto shift = [&](Rect q) { return Rect{q.x0 + spot->x, q.y0 + spot->y, q.x1 + spot->x, q.y1 + spot->y}; };
        if (anchor_rect) furnish.add(r, plant.anchor_category, furnish.random_attributes(), shift(*anchor_rect));
        auto attrs = furnish.random_attributes();
        for (const auto& [k, v] : plant.attributes) attrs[k] = v;
        out.planted.push_back(furnish.add(r, plant.category, attrs, shift(main_rect)));
    }

    const auto categories = priors.object_categories();
    for (const auto& room : map.rooms) {
        const Rect& in = interiors[static_cast<std::size_t>(room.id)];
        const double area = (in.x1 - in.x0 + 1) * (in.y1 - in.y0 + 1) * res * res;
        const int count = static_cast<int>(std::lround(params.object_density * area));
        std::vector<double> weights;
        double total = 0.0;
        for (const auto& c : categories) {
            const double w = params.exclude_categories.count(c) ? 0.0 : priors.prior(c, room.label);
            weights.push_back(w);
            total += w;
        }
        if (total <= 0.0) continue;
        for (int k = 0; k < count; ++k) {
            double u = uniform01(rng) * total;
            std::size_t pick = 0;
            while (pick + 1 < weights.size() && (weights[pick] <= 0.0 || u >= weights[pick])) {
                u -= weights[pick];
                ++pick;
            }
            const std::string& cat = categories[pick];
            const Rect rect = furnish.sized_rect(cat);
            const auto spot = furnish.find_spot(room.id, {rect}, 60);
            if (!spot) continue;
            furnish.add(room.id, cat, furnish.random_attributes(),
                        {rect.x0 + spot->x, rect.y0 + spot->y, rect.x1 + spot->x, rect.y1 + spot->y});
        }
    }

    out.world = World(std::move(map), std::move(furnish.objects()));
    validate_world(out.world);
    return out;
}

// ---------------------------------------------------------------------------
// Episodes
// ---------------------------------------------------------------------------

std::string tier_name(Tier t) {
    switch (t) {
        case Tier::Easy: return "easy";
        case Tier::Medium: return "medium";
        case Tier::Hard: return "hard";
        case Tier::Attribute: return "attribute";
        case Tier::Relation: return "relation";
    }
    return "unknown";
}

Tier tier_from_name(const std::string& name) {
    for (Tier t : {Tier::Easy, Tier::Medium, Tier::Hard, Tier::Attribute, Tier::Relation})
        if (tier_name(t) == name) return t;
    throw std::invalid_argument("unknown tier '" + name + "'");
}

double tier_timeout(Tier t) { return t == Tier::Easy ? 180.0 : 240.0; }

namespace {

struct StartCheck {
    const World& world;
    const ObjectInstance& target;
    double sensor_range;

    double distance(Cell c) const {
        double best = kInf;
        for (const Cell& f : target.footprint) best = std::min(best, cell_distance(c, f));
        return best * world.resolution();
    }
    bool visible(Cell c) const {
        const GridMap& map = world.map();
        auto blocks = [&](Cell q) { return !map.cells.in_bounds(q) || map.cells[q] == CellLabel::Occupied; };
        for (const Cell& f : target.footprint)
            if (cell_distance(c, f) * world.resolution() <= sensor_range && line_of_sight(grid_center(c), f, blocks))
                return true;
        return false;
    }
};

/// Cells with clearance from which a radius-`clearance` robot can reach an approach
/// cell of every planted target.
Mask traversable_mask(const World& world, double clearance) {
    const GridMap& map = world.map();
    Mask m(map.width(), map.height(), 0);
    for (int y = 0; y < map.height(); ++y)
        for (int x = 0; x < map.width(); ++x)
            if (map.free({x, y}) && footprint_clear(world, {x, y}, clearance)) m[{x, y}] = 1;
    return m;
}

bool reachable(const World& world, const Mask& trav, Cell start, const ObjectInstance& target, double radius_m) {
    const GridMap& map = world.map();
    Mask goals(map.width(), map.height(), 0);
    auto blocks = [&](Cell q) { return !map.cells.in_bounds(q) || map.cells[q] == CellLabel::Occupied; };
    for (int i = 0; i < trav.size(); ++i) {
        if (!trav[i]) continue;
        const Cell c = trav.cell(i);
        for (const Cell& f : target.footprint) {
            if (cell_distance(c, f) * map.resolution > radius_m) continue;
            if (line_of_sight(grid_center(c), f, blocks)) {
                goals[i] = 1;
                break;
            }
        }
    }
    return search_to_any(trav, start, goals).has_value();
}

}  // namespace

GeneratedEpisode generate_episode(std::uint64_t seed, Tier tier, const PriorsTable& priors,
                                  const EpisodeGenOptions& options) {
    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
        Rng rng = make_rng(hash_combine(seed, static_cast<std::uint64_t>(attempt)), 0x657069);  // "epi"
        GenParams params;
        Goal goal;
        const auto rooms = priors.room_categories();
        auto pick = [&](const std::vector<std::string>& pool) {
            return pool[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(pool.size()) - 1))];
        };
        auto distinct_labels = [&](int n, const std::string& must) {
            std::vector<std::string> pool;
            for (const auto& r : rooms)
                if (r != must) pool.push_back(r);
            shuffle_in_place(pool, rng);
            std::vector<std::string> labels(pool.begin(), pool.begin() + (must.empty() ? n : n - 1));
            if (!must.empty()) labels.insert(labels.begin() + uniform_int(rng, 0, n - 1), must);
            return labels;
        };
        auto sample_category = [&](const std::string& room) {
            std::vector<std::string> cats;
            for (const auto& c : priors.object_categories())
                if (priors.prior(c, room) > 0.0) cats.push_back(c);
            return pick(cats);
        };
        auto horizontal_or_vertical = [&](int n) {
            if (uniform01(rng) < 0.5) {
                params.rooms_x = n;
                params.rooms_y = 1;
            } else {
                params.rooms_x = 1;
                params.rooms_y = n;
            }
        };

        switch (tier) {
            case Tier::Easy: {
                params.room_size_min = 4.0;
                params.room_size_max = 6.0;
                params.room_labels = {pick(rooms)};
                goal.category = sample_category(params.room_labels[0]);
                params.plants = {{goal.category, {}, params.room_labels[0], "", "", false}};
                break;
            }
            case Tier::Medium: {
                params.room_size_min = 7.5;
                params.room_size_max = 9.0;
                params.object_density = 0.14;
                params.room_labels = {pick(rooms)};
                goal.category = sample_category(params.room_labels[0]);
                params.plants = {{goal.category, {}, params.room_labels[0], "", "", false}};
                break;
            }
            case Tier::Hard: {
                std::vector<std::string> informative;
                for (const auto& c : priors.object_categories())
                    if (priors.max_weight(c) >= 0.7) informative.push_back(c);
                goal.category = pick(informative);
                horizontal_or_vertical(3);
                params.room_labels = distinct_labels(3, priors.best_room(goal.category));
                params.plants = {{goal.category, {}, "", "", "", false}};
                break;
            }
            case Tier::Attribute: {
                goal.category = pick({"chair", "armchair", "sofa", "plant", "bookshelf"});
                horizontal_or_vertical(uniform_int(rng, 2, 3));
                params.room_labels = distinct_labels(params.rooms_x * params.rooms_y, "");
                std::vector<std::string> colors = kColors;
                shuffle_in_place(colors, rng);
                goal.constraints.emplace_back(AttrEq{"color", colors[0]});
                params.plants = {{goal.category, {{"color", colors[0]}}, "", "", "", false},
                                 {goal.category, {{"color", colors[1]}}, "", "", "", false},
                                 {goal.category, {{"color", colors[2]}}, "", "", "", true}};
                break;
            }
            case Tier::Relation: {
                horizontal_or_vertical(uniform_int(rng, 2, 3));
                params.room_labels = distinct_labels(params.rooms_x * params.rooms_y, "");
                if (uniform01(rng) < 0.5) {
                    goal.category = "cup";
                    goal.constraints.emplace_back(RelationTo{"on", "table"});
                    params.plants = {{"cup", {}, "", "on", "table", false}, {"cup", {}, "", "", "", true}};
                } else {
                    goal.category = "microwave";
                    goal.constraints.emplace_back(RelationTo{"near", "refrigerator"});
                    params.plants = {{"microwave", {}, "", "near", "refrigerator", false},
                                     {"microwave", {}, "", "", "", true}};
                    params.exclude_categories.insert("refrigerator");
                }
                break;
            }
        }
        params.exclude_categories.insert(goal.category);

        GeneratedMap gen;
        try {
            gen = generate_map(hash_combine(seed, 0x1000 + static_cast<std::uint64_t>(attempt)), params, priors);
        } catch (const GenError& e) {
            last_error = e.what();
            continue;
        }
        const World& world = gen.world;
        const ObjectInstance& target = *world.object(gen.planted.front());
        if (!satisfies(world, target, goal, priors.rules())) {
            last_error = "planted target does not satisfy the goal";
            continue;
        }
        // Distractors must not satisfy the goal, otherwise the episode is trivially easier.
        bool unique = true;
        for (const auto& o : world.objects())
            if (o.id != target.id && satisfies(world, o, goal, priors.rules())) unique = false;
        if (!unique) {
            last_error = "distractor satisfies the goal";
            continue;
        }

        const Mask trav = traversable_mask(world, options.start_clearance);
        const StartCheck check{world, target, options.sensor_range};
        std::vector<Cell> starts;
        for (int i = 0; i < trav.size(); ++i) {
            if (!trav[i]) continue;
            const Cell c = trav.cell(i);
            const double d = check.distance(c);
            const int room = world.map().rooms_gt[c];
            bool ok = false;
            switch (tier) {
                case Tier::Easy: ok = d >= 1.5 && d <= 4.0 && check.visible(c); break;
                case Tier::Medium: ok = d >= 3.0 && !check.visible(c); break;
                case Tier::Hard: ok = room != target.room_id; break;
                case Tier::Attribute:
                case Tier::Relation: ok = d >= 2.5; break;
            }
            if (ok) starts.push_back(c);
        }
        if (starts.empty()) {
            last_error = "no admissible start cell";
            continue;
        }
        const Cell start = starts[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(starts.size()) - 1))];
        if (!reachable(world, trav, start, target, options.eps_succ / 2.0)) {
            last_error = "target unreachable from start";
            continue;
        }

        GeneratedEpisode ep;
        ep.spec.id = tier_name(tier) + "-" + std::to_string(seed);
        ep.spec.map_path = ep.spec.id + ".map.json";
        const Vec2 p = cell_center(start, world.resolution());
        ep.spec.start = {p.x(), p.y(), uniform(rng, -kPi, kPi)};
        ep.spec.goal = goal;
        ep.spec.timeout_s = tier_timeout(tier);
        ep.spec.seed = seed;
        ep.spec.tier = tier_name(tier);
        ep.target_id = target.id;
        ep.world = std::move(gen.world);
        return ep;
    }
    throw GenError("episode generation failed for seed " + std::to_string(seed) + " (" + tier_name(tier) +
                   "): " + last_error);
}

}  // namespace roomnav
