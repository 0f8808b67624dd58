#include "roomnav/gridworld.hpp"

#include "roomnav/grid_search.hpp"
#include "roomnav/visibility.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

namespace roomnav {

using nlohmann::json;

const RoomInfo* GridMap::room(int id) const {
    for (const auto& r : rooms)
        if (r.id == id) return &r;
    return nullptr;
}

Vec2 ObjectInstance::centroid(double resolution) const {
    Vec2 sum = Vec2::Zero();
    for (const Cell& c : footprint) sum += cell_center(c, resolution);
    return footprint.empty() ? sum : Vec2(sum / static_cast<double>(footprint.size()));
}

World::World(GridMap map, std::vector<ObjectInstance> objects)
    : map_(std::move(map)), objects_(std::move(objects)),
      cell_objects_(map_.width(), map_.height()) {
    for (std::size_t i = 0; i < objects_.size(); ++i)
        for (const Cell& c : objects_[i].footprint)
            if (cell_objects_.in_bounds(c)) cell_objects_[c].push_back(static_cast<int>(i));
}

const ObjectInstance* World::object(int id) const {
    for (const auto& o : objects_)
        if (o.id == id) return &o;
    return nullptr;
}

const std::vector<int>& World::objects_at(Cell c) const {
    static const std::vector<int> empty;
    return cell_objects_.in_bounds(c) ? cell_objects_[c] : empty;
}

// ---------------------------------------------------------------------------
// Map file
// ---------------------------------------------------------------------------

namespace {

std::string cell_str(Cell c) {
    return "(" + std::to_string(c.x) + ", " + std::to_string(c.y) + ")";
}

std::vector<Cell> cells_from_rects(const json& rects, const std::string& what) {
    std::vector<Cell> cells;
    for (const auto& r : rects) {
        if (!r.is_array() || r.size() != 4)
            throw MapError(what + ": rectangles must be [x0, y0, x1, y1]");
        const int x0 = r[0].get<int>(), y0 = r[1].get<int>(), x1 = r[2].get<int>(), y1 = r[3].get<int>();
        if (x1 < x0 || y1 < y0) throw MapError(what + ": empty rectangle");
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) cells.push_back({x, y});
    }
    return cells;
}

/// Compresses a cell set into row runs [x0, y, x1, y].
json rects_from_cells(std::vector<Cell> cells) {
    std::sort(cells.begin(), cells.end(), [](Cell a, Cell b) {
        return a.y != b.y ? a.y < b.y : a.x < b.x;
    });
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    json rects = json::array();
    std::size_t i = 0;
    while (i < cells.size()) {
        std::size_t j = i;
        while (j + 1 < cells.size() && cells[j + 1].y == cells[i].y && cells[j + 1].x == cells[j].x + 1) ++j;
        rects.push_back({cells[i].x, cells[i].y, cells[j].x, cells[i].y});
        i = j + 1;
    }
    return rects;
}

int nearest_free_room(const GridMap& map, const Vec2& p) {
    const Cell c = cell_at(p, map.resolution);
    const int max_r = std::max(map.width(), map.height());
    for (int r = 0; r <= max_r; ++r) {
        double best = kInf;
        int room = -1;
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) {
                if (std::max(std::abs(dx), std::abs(dy)) != r) continue;
                const Cell n{c.x + dx, c.y + dy};
                if (!map.free(n)) continue;
                const double d = (cell_center(n, map.resolution) - p).squaredNorm();
                if (d < best) {
                    best = d;
                    room = map.rooms_gt[n];
                }
            }
        if (room >= 0) return room;
    }
    return -1;
}

}  // namespace

World world_from_json(const json& doc) {
    try {
        if (doc.value("format", 0) != 1) throw MapError("map: unsupported or missing \"format\" (expected 1)");
        GridMap map;
        map.resolution = doc.at("resolution").get<double>();
        if (!(map.resolution > 0.0)) throw MapError("map: resolution must be positive");
        const auto& rows = doc.at("grid");
        if (!rows.is_array() || rows.empty()) throw MapError("map: grid must be a non-empty list of rows");
        const int height = static_cast<int>(rows.size());
        const int width = static_cast<int>(rows[0].get<std::string>().size());
        map.cells = Grid<CellLabel>(width, height, CellLabel::Free);
        map.rooms_gt = Grid<int>(width, height, -1);
        for (int y = 0; y < height; ++y) {
            const auto row = rows[static_cast<std::size_t>(y)].get<std::string>();
            if (static_cast<int>(row.size()) != width)
                throw MapError("map: grid row " + std::to_string(y) + " has length " +
                               std::to_string(row.size()) + ", expected " + std::to_string(width));
            for (int x = 0; x < width; ++x) {
                const char ch = row[static_cast<std::size_t>(x)];
                if (ch == '.') map.cells[{x, y}] = CellLabel::Free;
                else if (ch == '#') map.cells[{x, y}] = CellLabel::Occupied;
                else throw MapError("map: invalid grid character '" + std::string(1, ch) + "' at cell " + cell_str({x, y}));
            }
        }
        for (const auto& r : doc.at("rooms")) {
            RoomInfo info{r.at("id").get<int>(), r.value("label", std::string{})};
            for (const Cell& c : cells_from_rects(r.at("cells"), "room " + std::to_string(info.id))) {
                if (!map.cells.in_bounds(c)) throw MapError("room " + std::to_string(info.id) + ": cell " + cell_str(c) + " out of bounds");
                if (map.cells[c] != CellLabel::Free) continue;
                if (map.rooms_gt[c] >= 0 && map.rooms_gt[c] != info.id)
                    throw MapError("cell " + cell_str(c) + " assigned to rooms " + std::to_string(map.rooms_gt[c]) +
                                   " and " + std::to_string(info.id));
                map.rooms_gt[c] = info.id;
            }
            map.rooms.push_back(info);
        }
        if (doc.contains("doors")) {
            for (const auto& d : doc.at("doors")) {
                Door door;
                door.id = d.at("id").get<int>();
                door.cells = cells_from_rects(d.at("cells"), "door " + std::to_string(door.id));
                if (d.contains("rooms")) door.rooms = d.at("rooms").get<std::vector<int>>();
                map.doors.push_back(std::move(door));
            }
        }
        std::vector<ObjectInstance> objects;
        if (doc.contains("objects")) {
            for (const auto& o : doc.at("objects")) {
                ObjectInstance obj;
                obj.id = o.at("id").get<int>();
                obj.category = o.at("category").get<std::string>();
                if (o.contains("attributes"))
                    obj.attributes = o.at("attributes").get<std::map<std::string, std::string>>();
                obj.footprint = cells_from_rects(o.at("cells"), "object " + std::to_string(obj.id));
                obj.room_id = o.value("room", -1);
                objects.push_back(std::move(obj));
            }
        }
        // Derived fields: door room pairs and object rooms.
        for (auto& door : map.doors) {
            if (!door.rooms.empty()) continue;
            std::set<int> ids;
            for (const Cell& c : door.cells)
                for (Cell n : {c, Cell{c.x + 1, c.y}, Cell{c.x - 1, c.y}, Cell{c.x, c.y + 1}, Cell{c.x, c.y - 1}})
                    if (map.free(n) && map.rooms_gt[n] >= 0) ids.insert(map.rooms_gt[n]);
            door.rooms.assign(ids.begin(), ids.end());
        }
        for (auto& obj : objects) {
            if (obj.footprint.empty()) throw MapError("object " + std::to_string(obj.id) + ": empty footprint");
            for (const Cell& c : obj.footprint)
                if (!map.cells.in_bounds(c))
                    throw MapError("object " + std::to_string(obj.id) + ": cell " + cell_str(c) + " out of bounds");
            const int room = nearest_free_room(map, obj.centroid(map.resolution));
            if (obj.room_id >= 0 && obj.room_id != room)
                throw MapError("object " + std::to_string(obj.id) + ": declared room " + std::to_string(obj.room_id) +
                               " but its centroid lies in room " + std::to_string(room));
            obj.room_id = room;
        }
        World world(std::move(map), std::move(objects));
        validate_world(world);
        return world;
    } catch (const json::exception& e) {
        throw MapError(std::string("map: ") + e.what());
    }
}

void validate_world(const World& world) {
    const GridMap& map = world.map();
    Mask door_cell(map.width(), map.height(), 0);
    for (const auto& d : map.doors)
        for (const Cell& c : d.cells)
            if (door_cell.in_bounds(c)) door_cell[c] = 1;

    for (int y = 0; y < map.height(); ++y)
        for (int x = 0; x < map.width(); ++x) {
            const Cell c{x, y};
            if (!map.free(c)) continue;
            if (map.rooms_gt[c] < 0) throw MapError("cell " + cell_str(c) + " is Free but belongs to no room");
            if (!map.room(map.rooms_gt[c]))
                throw MapError("cell " + cell_str(c) + " references undeclared room " + std::to_string(map.rooms_gt[c]));
            for (Cell n : {Cell{x + 1, y}, Cell{x, y + 1}}) {
                if (!map.free(n) || map.rooms_gt[n] == map.rooms_gt[c]) continue;
                if (!door_cell[c] && !door_cell[n])
                    throw MapError("cell " + cell_str(c) + " straddles rooms " + std::to_string(map.rooms_gt[c]) +
                                   " and " + std::to_string(map.rooms_gt[n]) + " without a door");
            }
        }

    // Each room must be 4-connected on its own Free cells.
    Mask seen(map.width(), map.height(), 0);
    std::set<int> visited_rooms;
    for (int y = 0; y < map.height(); ++y)
        for (int x = 0; x < map.width(); ++x) {
            const Cell c{x, y};
            if (!map.free(c) || seen[c]) continue;
            const int room = map.rooms_gt[c];
            if (visited_rooms.count(room))
                throw MapError("cell " + cell_str(c) + " is disconnected from the rest of room " + std::to_string(room));
            visited_rooms.insert(room);
            std::deque<Cell> queue{c};
            seen[c] = 1;
            while (!queue.empty()) {
                const Cell cur = queue.front();
                queue.pop_front();
                for (Cell n : {Cell{cur.x + 1, cur.y}, Cell{cur.x - 1, cur.y}, Cell{cur.x, cur.y + 1}, Cell{cur.x, cur.y - 1}}) {
                    if (!map.free(n) || seen[n] || map.rooms_gt[n] != room) continue;
                    seen[n] = 1;
                    queue.push_back(n);
                }
            }
        }
}

World parse_map(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw MapError("map parse error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                       e.what());
    }
    return world_from_json(doc);
}

World load_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MapError("cannot open map file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_map(ss.str());
}

json world_to_json(const World& world) {
    const GridMap& map = world.map();
    json doc;
    doc["format"] = 1;
    doc["resolution"] = map.resolution;
    json rows = json::array();
    for (int y = 0; y < map.height(); ++y) {
        std::string row(static_cast<std::size_t>(map.width()), '.');
        for (int x = 0; x < map.width(); ++x)
            if (map.cells[{x, y}] == CellLabel::Occupied) row[static_cast<std::size_t>(x)] = '#';
        rows.push_back(row);
    }
    doc["grid"] = rows;
    json rooms = json::array();
    for (const auto& r : map.rooms) {
        std::vector<Cell> cells;
        for (int y = 0; y < map.height(); ++y)
            for (int x = 0; x < map.width(); ++x)
                if (map.rooms_gt[{x, y}] == r.id) cells.push_back({x, y});
        rooms.push_back({{"id", r.id}, {"label", r.label}, {"cells", rects_from_cells(cells)}});
    }
    doc["rooms"] = rooms;
    json doors = json::array();
    for (const auto& d : map.doors) doors.push_back({{"id", d.id}, {"rooms", d.rooms}, {"cells", rects_from_cells(d.cells)}});
    doc["doors"] = doors;
    json objects = json::array();
    for (const auto& o : world.objects()) {
        objects.push_back({{"id", o.id},
                           {"category", o.category},
                           {"attributes", o.attributes},
                           {"room", o.room_id},
                           {"cells", rects_from_cells(o.footprint)}});
    }
    doc["objects"] = objects;
    return doc;
}

// ---------------------------------------------------------------------------
// Sensing
// ---------------------------------------------------------------------------

Observation sense(const World& world, const Pose& pose, double range_m, const SensorModel& sensor, Rng& rng) {
    const GridMap& map = world.map();
    const double res = map.resolution;
    const Cell origin = cell_at(pose.position(), res);
    if (!map.cells.in_bounds(origin)) throw std::out_of_range("sense: pose out of bounds");

    Observation obs;
    obs.pose = pose;
    const Vec2 from = pose.position() / res;
    const double range_cells = range_m / res;
    const int r = static_cast<int>(std::ceil(range_cells)) + 1;
    auto blocks = [&](Cell c) { return !map.cells.in_bounds(c) || map.cells[c] == CellLabel::Occupied; };

    thread_local Mask visible;
    if (visible.width() != map.width() || visible.height() != map.height()) visible = Mask(map.width(), map.height(), 0);
    for (int y = std::max(0, origin.y - r); y <= std::min(map.height() - 1, origin.y + r); ++y)
        for (int x = std::max(0, origin.x - r); x <= std::min(map.width() - 1, origin.x + r); ++x) {
            const Cell c{x, y};
            if ((grid_center(c) - from).norm() > range_cells + 1e-9) continue;
            if (!line_of_sight(from, c, blocks)) continue;
            obs.visible.push_back({c, map.cells[c]});
            visible[c] = 1;
        }

    for (const auto& object : world.objects()) {
        Detection det;
        for (const Cell& c : object.footprint)
            if (visible.in_bounds(c) && visible[c]) det.cells.push_back(c);
        if (det.cells.empty()) continue;
        const double conf = uniform(rng, sensor.confidence_min, sensor.confidence_max);
        const double miss = uniform01(rng);
        if (miss < sensor.p_false_negative) continue;
        det.category = object.category;
        det.confidence = std::clamp(conf, 1e-6, 1.0);
        det.instance_id = object.id;
        obs.detections.push_back(std::move(det));
    }
    for (const auto& vc : obs.visible) visible[vc.cell] = 0;
    return obs;
}

// ---------------------------------------------------------------------------
// Kinematics
// ---------------------------------------------------------------------------

std::vector<Cell> footprint_cells(Cell c, double radius_m, double resolution) {
    std::vector<Cell> cells;
    for (const Cell& o : disc_offsets(radius_m / resolution)) cells.push_back({c.x + o.x, c.y + o.y});
    return cells;
}

bool footprint_clear(const World& world, Cell c, double radius_m) {
    for (const Cell& f : footprint_cells(c, radius_m, world.resolution()))
        if (!world.map().free(f)) return false;
    return true;
}

Pose integrate_unicycle(const Pose& p, double v, double omega, double dt) {
    Pose out = p;
    if (std::abs(omega) < 1e-9) {
        out.x += v * dt * std::cos(p.theta);
        out.y += v * dt * std::sin(p.theta);
    } else {
        const double th1 = p.theta + omega * dt;
        out.x += v / omega * (std::sin(th1) - std::sin(p.theta));
        out.y -= v / omega * (std::cos(th1) - std::cos(p.theta));
    }
    out.theta = wrap_angle(p.theta + omega * dt);
    return out;
}

std::vector<Cell> swept_cells(const Pose& pose, double v, double omega, double dt, double resolution) {
    std::vector<Cell> out;
    const double dist = std::abs(v) * dt;
    const int substeps = std::max(1, static_cast<int>(std::ceil(dist / (0.25 * resolution))));
    Cell last = cell_at(pose.position(), resolution);
    for (int i = 1; i <= substeps; ++i) {
        const Cell c = cell_at(integrate_unicycle(pose, v, omega, dt * i / substeps).position(), resolution);
        if (c == last) continue;
        out.push_back(c);
        last = c;
    }
    return out;
}

AgentState step(const World& world, const AgentState& state, const MotionCommand& cmd, double dt,
                const EmbodimentProfile& profile) {
    const double v = std::clamp(cmd.v, -profile.v_max, profile.v_max);
    const double omega = std::clamp(cmd.omega, -profile.omega_max, profile.omega_max);
    AgentState next = state;
    next.elapsed += dt;
    for (const Cell& c : swept_cells(state.pose, v, omega, dt, world.resolution()))
        if (!footprint_clear(world, c, profile.radius)) return next;  // blocked
    next.pose = integrate_unicycle(state.pose, v, omega, dt);
    next.traveled += std::abs(v) * dt;
    return next;
}

// ---------------------------------------------------------------------------
// Goal evaluation
// ---------------------------------------------------------------------------

std::optional<bool> relation_holds(const std::string& relation, const ObjectInstance& subject,
                                   const ObjectInstance& other, double resolution, const RelationRules& rules) {
    if (relation == "near") {
        return (subject.centroid(resolution) - other.centroid(resolution)).norm() <= rules.near_max_m + 1e-9;
    }
    if (relation == "on") {
        if (subject.footprint.size() > other.footprint.size()) return false;
        bool touching = false;
        for (const Cell& a : subject.footprint) {
            for (const Cell& b : other.footprint)
                if (std::abs(a.x - b.x) <= 1 && std::abs(a.y - b.y) <= 1) {
                    touching = true;
                    break;
                }
            if (touching) break;
        }
        if (!touching) return false;
        auto bounds = [](const std::vector<Cell>& cells) {
            Cell lo{std::numeric_limits<int>::max(), std::numeric_limits<int>::max()};
            Cell hi{std::numeric_limits<int>::min(), std::numeric_limits<int>::min()};
            for (const Cell& c : cells) {
                lo = {std::min(lo.x, c.x), std::min(lo.y, c.y)};
                hi = {std::max(hi.x, c.x), std::max(hi.y, c.y)};
            }
            return std::pair{lo, hi};
        };
        const auto [slo, shi] = bounds(subject.footprint);
        const auto [olo, ohi] = bounds(other.footprint);
        const int d = rules.on_dilation_cells;
        return slo.x >= olo.x - d && slo.y >= olo.y - d && shi.x <= ohi.x + d && shi.y <= ohi.y + d;
    }
    return std::nullopt;
}

bool satisfies(const World& world, const ObjectInstance& object, const Goal& goal, const RelationRules& rules) {
    if (object.category != goal.category) return false;
    for (const auto& constraint : goal.constraints) {
        const bool ok = std::visit(
            [&](const auto& c) -> bool {
                using T = std::decay_t<decltype(c)>;
                if constexpr (std::is_same_v<T, AttrEq>) {
                    auto it = object.attributes.find(c.name);
                    return it != object.attributes.end() && it->second == c.value;
                } else if constexpr (std::is_same_v<T, RelationTo>) {
                    for (const auto& other : world.objects()) {
                        if (other.id == object.id || other.category != c.other_category) continue;
                        if (relation_holds(c.relation, object, other, world.resolution(), rules).value_or(false))
                            return true;
                    }
                    return false;
                } else {
                    const RoomInfo* room = world.map().room(object.room_id);
                    return room && room->label == c.room_category;
                }
            },
            constraint);
        if (!ok) return false;
    }
    return true;
}

namespace {

bool observable_from(const World& world, const Vec2& from_grid, const ObjectInstance& object) {
    const GridMap& map = world.map();
    auto blocks = [&](Cell c) { return !map.cells.in_bounds(c) || map.cells[c] == CellLabel::Occupied; };
    for (const Cell& f : object.footprint)
        if (line_of_sight(from_grid, f, blocks)) return true;
    return false;
}

double distance_to_footprint(const Vec2& p, const ObjectInstance& object, double res) {
    double best = kInf;
    for (const Cell& f : object.footprint) best = std::min(best, (cell_center(f, res) - p).norm());
    return best;
}

}  // namespace

bool check_success(const Pose& pose, const Goal& goal, const World& world, double eps_succ, const RelationRules& rules) {
    const double res = world.resolution();
    for (const auto& object : world.objects()) {
        if (!satisfies(world, object, goal, rules)) continue;
        if (distance_to_footprint(pose.position(), object, res) > eps_succ + 1e-9) continue;
        if (observable_from(world, pose.position() / res, object)) return true;
    }
    return false;
}

std::optional<double> shortest_path_len(const World& world, const Pose& start, const Goal& goal, double eps_succ,
                                        const RelationRules& rules) {
    const GridMap& map = world.map();
    const double res = map.resolution;
    Mask passable(map.width(), map.height(), 0);
    for (int i = 0; i < passable.size(); ++i) passable[i] = map.cells[i] == CellLabel::Free ? 1 : 0;

    Mask goals(map.width(), map.height(), 0);
    bool any_goal = false;
    const int pad = static_cast<int>(std::ceil(eps_succ / res)) + 1;
    for (const auto& object : world.objects()) {
        if (!satisfies(world, object, goal, rules)) continue;
        Cell lo{map.width(), map.height()}, hi{-1, -1};
        for (const Cell& f : object.footprint) {
            lo = {std::min(lo.x, f.x), std::min(lo.y, f.y)};
            hi = {std::max(hi.x, f.x), std::max(hi.y, f.y)};
        }
        for (int y = std::max(0, lo.y - pad); y <= std::min(map.height() - 1, hi.y + pad); ++y)
            for (int x = std::max(0, lo.x - pad); x <= std::min(map.width() - 1, hi.x + pad); ++x) {
                const Cell c{x, y};
                if (!passable[c] || goals[c]) continue;
                if (distance_to_footprint(cell_center(c, res), object, res) > eps_succ + 1e-9) continue;
                if (!observable_from(world, grid_center(c), object)) continue;
                goals[c] = 1;
                any_goal = true;
            }
    }
    if (!any_goal) return std::nullopt;
    const auto path = search_to_any(passable, cell_at(start.position(), res), goals);
    if (!path) return std::nullopt;
    return path->cost * res;
}

// ---------------------------------------------------------------------------
// Goal / episode JSON
// ---------------------------------------------------------------------------

json goal_to_json(const Goal& goal) {
    json constraints = json::array();
    for (const auto& constraint : goal.constraints) {
        std::visit(
            [&](const auto& c) {
                using T = std::decay_t<decltype(c)>;
                if constexpr (std::is_same_v<T, AttrEq>)
                    constraints.push_back({{"type", "attr"}, {"name", c.name}, {"value", c.value}});
                else if constexpr (std::is_same_v<T, RelationTo>)
                    constraints.push_back({{"type", "relation"}, {"relation", c.relation}, {"other", c.other_category}});
                else
                    constraints.push_back({{"type", "in_room"}, {"room", c.room_category}});
            },
            constraint);
    }
    return {{"category", goal.category}, {"constraints", constraints}};
}

Goal goal_from_json(const json& j) {
    Goal goal;
    goal.category = j.at("category").get<std::string>();
    if (j.contains("constraints")) {
        for (const auto& c : j.at("constraints")) {
            const auto type = c.at("type").get<std::string>();
            if (type == "attr")
                goal.constraints.emplace_back(AttrEq{c.at("name").get<std::string>(), c.at("value").get<std::string>()});
            else if (type == "relation")
                goal.constraints.emplace_back(
                    RelationTo{c.at("relation").get<std::string>(), c.at("other").get<std::string>()});
            else if (type == "in_room")
                goal.constraints.emplace_back(InRoom{c.at("room").get<std::string>()});
            else
                throw std::invalid_argument("goal: unknown constraint type '" + type + "'");
        }
    }
    return goal;
}

json pose_to_json(const Pose& pose) { return {{"x", pose.x}, {"y", pose.y}, {"theta", pose.theta}}; }

Pose pose_from_json(const json& j) {
    return {j.at("x").get<double>(), j.at("y").get<double>(), j.value("theta", 0.0)};
}

json episodes_to_json(const std::vector<EpisodeSpec>& episodes) {
    json list = json::array();
    for (const auto& e : episodes) {
        list.push_back({{"id", e.id},
                        {"map", e.map_path},
                        {"start", pose_to_json(e.start)},
                        {"goal", goal_to_json(e.goal)},
                        {"timeout", e.timeout_s},
                        {"seed", e.seed},
                        {"tier", e.tier}});
    }
    return {{"format", 1}, {"episodes", list}};
}

std::vector<EpisodeSpec> episodes_from_json(const json& doc) {
    if (doc.value("format", 0) != 1) throw std::invalid_argument("episodes: unsupported or missing \"format\"");
    std::vector<EpisodeSpec> out;
    for (const auto& e : doc.at("episodes")) {
        EpisodeSpec spec;
        spec.id = e.at("id").get<std::string>();
        spec.map_path = e.at("map").get<std::string>();
        spec.start = pose_from_json(e.at("start"));
        spec.goal = goal_from_json(e.at("goal"));
        spec.timeout_s = e.value("timeout", 240.0);
        spec.seed = e.value("seed", std::uint64_t{0});
        spec.tier = e.value("tier", std::string{});
        out.push_back(std::move(spec));
    }
    return out;
}

std::vector<EpisodeSpec> load_episodes(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open episode file '" + path + "'");
    return episodes_from_json(json::parse(in));
}

std::string describe(const Goal& goal) {
    return goal_to_json(goal).dump();
}

}  // namespace roomnav
