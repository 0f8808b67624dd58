#include "roomnav/scene_rep.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <tuple>

namespace roomnav {

using nlohmann::json;

int SceneParams::effective_dilation(double resolution) const {
    if (dilation_radius >= 0) return dilation_radius;
    return static_cast<int>(std::ceil(door_width_max / 2.0 / resolution - 1e-9));
}

Vec2 ObjectNode::centroid(double resolution) const {
    Vec2 sum = Vec2::Zero();
    for (const Cell& c : cells) sum += cell_center(c, resolution);
    return cells.empty() ? sum : Vec2(sum / static_cast<double>(cells.size()));
}

namespace {

bool cell_less(Cell a, Cell b) { return a.y != b.y ? a.y < b.y : a.x < b.x; }

void add_cells(std::vector<Cell>& into, const std::vector<Cell>& more) {
    into.insert(into.end(), more.begin(), more.end());
    std::sort(into.begin(), into.end(), cell_less);
    into.erase(std::unique(into.begin(), into.end()), into.end());
}

void tighten(ObjectNode& node) {
    node.lo = node.hi = node.cells.front();
    for (const Cell& c : node.cells) {
        node.lo = {std::min(node.lo.x, c.x), std::min(node.lo.y, c.y)};
        node.hi = {std::max(node.hi.x, c.x), std::max(node.hi.y, c.y)};
    }
}

}  // namespace

bool ObjectNode::contains(Cell c) const { return std::binary_search(cells.begin(), cells.end(), c, cell_less); }

SceneRep::SceneRep(int width, int height, double resolution, SceneParams params)
    : params_(params), resolution_(resolution), belief_(width, height, Belief::Unknown), covered_(width, height, 0),
      traj_covered_(width, height, 0), room_of_(width, height, -1) {}

const RoomNode* SceneRep::room(int id) const {
    auto it = rooms_.find(id);
    return it == rooms_.end() ? nullptr : &it->second;
}

const ObjectNode* SceneRep::object(int id) const {
    auto it = objects_.find(id);
    return it == objects_.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------
// Observation fusion
// ---------------------------------------------------------------------------

std::vector<int> SceneRep::integrate_observation(const Observation& obs) {
    const Vec2 p = obs.pose.position();
    bool changed = false;
    for (const auto& vc : obs.visible) {
        if (!belief_.in_bounds(vc.cell)) continue;
        Belief& b = belief_[vc.cell];
        const Belief next = vc.label == CellLabel::Occupied ? Belief::Occupied
                            : (b == Belief::Unknown ? Belief::Free : b);
        if (next != b) {
            b = next;
            changed = true;
        }
        if ((cell_center(vc.cell, resolution_) - p).norm() < params_.d_cover) traj_covered_[vc.cell] = 1;
    }
    if (changed) ++belief_revision_;
    trajectory_.push_back(obs.pose);

    std::vector<int> nodes;
    std::map<int, int> redirect;  // dropped node -> survivor
    auto resolve = [&](int id) {
        while (redirect.count(id)) id = redirect.at(id);
        return id;
    };
    const double merge2 = params_.merge_distance * params_.merge_distance;
    for (const auto& det : obs.detections) {
        if (det.cells.empty()) continue;
        std::vector<Cell> cells = det.cells;
        std::sort(cells.begin(), cells.end(), cell_less);
        cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
        Cell lo = cells.front(), hi = cells.front();
        Vec2 centroid = Vec2::Zero();
        for (const Cell& c : cells) {
            lo = {std::min(lo.x, c.x), std::min(lo.y, c.y)};
            hi = {std::max(hi.x, c.x), std::max(hi.y, c.y)};
            centroid += cell_center(c, resolution_);
        }
        centroid /= static_cast<double>(cells.size());

        std::vector<int> matches;
        for (const auto& [id, node] : objects_) {
            if (node.category != det.category) continue;
            if ((node.centroid(resolution_) - centroid).squaredNorm() < merge2) {
                matches.push_back(id);
                continue;
            }
            // Overlap or 8-adjacency of footprints.
            if (hi.x < node.lo.x - 1 || lo.x > node.hi.x + 1 || hi.y < node.lo.y - 1 || lo.y > node.hi.y + 1) continue;
            bool touch = false;
            for (const Cell& c : cells) {
                for (int dy = -1; dy <= 1 && !touch; ++dy)
                    for (int dx = -1; dx <= 1 && !touch; ++dx)
                        if (node.contains({c.x + dx, c.y + dy})) touch = true;
                if (touch) break;
            }
            if (touch) matches.push_back(id);
        }

        int target;
        if (matches.empty()) {
            target = next_object_++;
            ObjectNode node;
            node.id = target;
            node.category = det.category;
            objects_.emplace(target, std::move(node));
        } else {
            target = matches.front();  // lowest id, the map is ordered
            for (std::size_t k = 1; k < matches.size(); ++k) {
                merge_objects(target, matches[k]);
                redirect[matches[k]] = target;
            }
        }
        ObjectNode& node = objects_.at(target);
        add_cells(node.cells, cells);
        tighten(node);
        node.confidence = std::max(node.confidence, det.confidence);
        assign_object_room(node);
        nodes.push_back(target);
    }
    for (int& id : nodes) id = resolve(id);
    last_nodes_ = nodes;
    last_pose_ = obs.pose;
    return nodes;
}

void SceneRep::merge_objects(int keep, int drop) {
    ObjectNode& k = objects_.at(keep);
    ObjectNode& d = objects_.at(drop);
    add_cells(k.cells, d.cells);
    tighten(k);
    k.confidence = std::max(k.confidence, d.confidence);
    for (const auto& [name, value] : d.attributes) k.attributes.emplace(name, value);
    if (d.best_view_cells > k.best_view_cells) {
        k.best_view = d.best_view;
        k.best_view_cells = d.best_view_cells;
    }
    objects_.erase(drop);

    std::set<std::pair<int, int>> vo;
    for (auto [v, o] : vo_) vo.insert({v, o == drop ? keep : o});
    vo_ = std::move(vo);
    for (auto& [_, vp] : viewpoints_) {
        auto it = vp.object_cells.find(drop);
        if (it == vp.object_cells.end()) continue;
        const int n = it->second;
        vp.object_cells.erase(it);
        vp.object_cells[keep] = std::max(vp.object_cells[keep], n);
    }
    std::set<RelationEdge> oo;
    for (auto e : oo_) {
        if (e.subject == drop) e.subject = keep;
        if (e.other == drop) e.other = keep;
        if (e.subject != e.other) oo.insert(e);
    }
    oo_ = std::move(oo);
    std::map<std::tuple<int, int, std::string>, Verdict> cache;
    for (const auto& [key, v] : relation_cache_) {
        auto [a, b, rel] = key;
        if (a == drop || b == drop) continue;  // footprint changed, ask again
        cache.emplace(key, v);
    }
    relation_cache_ = std::move(cache);
}

void SceneRep::assign_object_room(ObjectNode& node) const {
    const Cell c = cell_at(node.centroid(resolution_), resolution_);
    const int max_r = static_cast<int>(std::ceil(2.0 / resolution_));
    for (int r = 0; r <= max_r; ++r) {
        int best = -1;
        double best_d = kInf;
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) {
                if (std::max(std::abs(dx), std::abs(dy)) != r) continue;
                const int room = room_at({c.x + dx, c.y + dy});
                if (room < 0) continue;
                const double d = dx * dx + dy * dy;
                if (d < best_d) {
                    best_d = d;
                    best = room;
                }
            }
        if (best >= 0) {
            node.room = best;
            return;
        }
    }
    node.room = -1;
}

// ---------------------------------------------------------------------------
// Viewpoints
// ---------------------------------------------------------------------------

std::vector<int> SceneRep::coverage_cells(const Pose& pose, const Observation& obs) const {
    std::vector<int> out;
    const Vec2 p = pose.position();
    for (const auto& vc : obs.visible)
        if (belief_.in_bounds(vc.cell) && (cell_center(vc.cell, resolution_) - p).norm() < params_.d_cover)
            out.push_back(belief_.index(vc.cell));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::optional<int> SceneRep::maybe_add_viewpoint(const Pose& pose, const Observation& obs) {
    std::vector<int> cov = coverage_cells(pose, obs);
    int novel = 0;
    for (int i : cov)
        if (!covered_[i]) ++novel;
    if (novel <= params_.viewpoint_eps) return std::nullopt;
    return add_viewpoint(pose, obs, std::move(cov));
}

int SceneRep::force_viewpoint(const Pose& pose, const Observation& obs) {
    return add_viewpoint(pose, obs, coverage_cells(pose, obs));
}

int SceneRep::add_viewpoint(const Pose& pose, const Observation& obs, std::vector<int> coverage) {
    for (int i : coverage)
        if (!covered_[i]) {
            covered_[i] = 1;
            ++covered_count_;
        }
    ViewpointNode vp;
    vp.id = next_view_++;
    vp.pose = pose;
    vp.coverage = std::move(coverage);
    vp.observation = obs;
    vp.room = room_at(cell_at(pose.position(), resolution_));
    const bool linked = last_pose_.x == pose.x && last_pose_.y == pose.y && last_nodes_.size() == obs.detections.size();
    if (linked) {
        for (std::size_t k = 0; k < obs.detections.size(); ++k) {
            const int node = last_nodes_[k];
            if (!objects_.count(node)) continue;
            vo_.insert({vp.id, node});
            int& n = vp.object_cells[node];
            n = std::max(n, static_cast<int>(obs.detections[k].cells.size()));
        }
    }
    for (const auto& [node, n] : vp.object_cells) {
        ObjectNode& o = objects_.at(node);
        if (n > o.best_view_cells) {
            o.best_view = vp.id;
            o.best_view_cells = n;
        }
    }
    std::map<int, int> per_room;
    for (const auto& vc : obs.visible) {
        const int r = room_at(vc.cell);
        if (r >= 0) ++per_room[r];
    }
    for (const auto& [r, n] : per_room) {
        RoomNode& room = rooms_.at(r);
        if (n > room.best_view_cells) {
            room.best_view = vp.id;
            room.best_view_cells = n;
        }
    }
    const int id = vp.id;
    viewpoints_.emplace(id, std::move(vp));
    return id;
}

void SceneRep::mark_trajectory_covered(const std::vector<int>& cells) {
    for (int i : cells)
        if (i >= 0 && i < traj_covered_.size()) traj_covered_[i] = 1;
}

std::vector<int> SceneRep::co_observing(int a, int b) const {
    std::vector<int> out;
    for (const auto& [id, vp] : viewpoints_)
        if (vp.object_cells.count(a) && vp.object_cells.count(b)) out.push_back(id);
    return out;
}

// ---------------------------------------------------------------------------
// Room segmentation
// ---------------------------------------------------------------------------

void SceneRep::segment_rooms() { segment_rooms(params_.effective_dilation(resolution_)); }

void SceneRep::segment_rooms(int dilation_radius) {
    const int w = width(), h = height();
    Mask object_cell(w, h, 0);
    for (const auto& [_, o] : objects_)
        for (const Cell& c : o.cells)
            if (object_cell.in_bounds(c)) object_cell[c] = 1;
    auto is_wall = [&](Cell c) {
        return belief_.in_bounds(c) && belief_[c] == Belief::Occupied && !object_cell[c];
    };

    // Dilate wall cells; only cells bordering non-wall space need stamping.
    Mask blocked(w, h, 0);
    const auto disc = disc_offsets(static_cast<double>(dilation_radius));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const Cell c{x, y};
            if (!is_wall(c)) continue;
            blocked[c] = 1;
            bool border = false;
            for (Cell n : {Cell{x + 1, y}, Cell{x - 1, y}, Cell{x, y + 1}, Cell{x, y - 1}})
                if (belief_.in_bounds(n) && !is_wall(n)) border = true;
            if (!border) continue;
            for (const Cell& o : disc) {
                const Cell q{x + o.x, y + o.y};
                if (blocked.in_bounds(q)) blocked[q] = 1;
            }
        }

    // Connected components of the remaining known-Free cells.
    Grid<int> comp(w, h, -1);
    std::vector<std::vector<int>> components;
    const int min_cells = static_cast<int>(std::ceil(params_.min_room_area / (resolution_ * resolution_) - 1e-9));
    for (int i = 0; i < comp.size(); ++i) {
        if (comp[i] != -1 || belief_[i] != Belief::Free || blocked[i]) continue;
        std::vector<int> cells{i};
        comp[i] = -2;
        for (std::size_t head = 0; head < cells.size(); ++head) {
            const Cell c = comp.cell(cells[head]);
            for (Cell n : {Cell{c.x + 1, c.y}, Cell{c.x - 1, c.y}, Cell{c.x, c.y + 1}, Cell{c.x, c.y - 1}}) {
                if (!comp.in_bounds(n) || comp[n] != -1 || belief_[n] != Belief::Free || blocked[n]) continue;
                comp[n] = -2;
                cells.push_back(comp.index(n));
            }
        }
        if (static_cast<int>(cells.size()) >= min_cells) {
            for (int k : cells) comp[k] = static_cast<int>(components.size());
            components.push_back(std::move(cells));
        } else {
            for (int k : cells) comp[k] = -3;  // too small to be a room, claimable below
        }
    }

    // Grow components back over the Free cells the dilation consumed.
    const int cap = 2 * dilation_radius + 2;
    Grid<int> dist(w, h, -1);
    std::deque<int> queue;
    for (const auto& cells : components)
        for (int k : cells) {
            dist[k] = 0;
        }
    for (int i = 0; i < comp.size(); ++i)
        if (comp[i] >= 0) queue.push_back(i);
    while (!queue.empty()) {
        const int i = queue.front();
        queue.pop_front();
        if (dist[i] >= cap) continue;
        const Cell c = comp.cell(i);
        for (Cell n : {Cell{c.x + 1, c.y}, Cell{c.x - 1, c.y}, Cell{c.x, c.y + 1}, Cell{c.x, c.y - 1}}) {
            if (!comp.in_bounds(n) || belief_[n] != Belief::Free || comp[n] >= 0) continue;
            comp[n] = comp[i];
            dist[n] = dist[i] + 1;
            components[static_cast<std::size_t>(comp[i])].push_back(comp.index(n));
            queue.push_back(comp.index(n));
        }
    }
    for (auto& cells : components) std::sort(cells.begin(), cells.end());

    // Stable ids: each new component inherits the old room it overlaps most.
    struct Overlap {
        int count, old_id, comp;
    };
    std::vector<Overlap> overlaps;
    for (std::size_t k = 0; k < components.size(); ++k) {
        std::map<int, int> counts;
        for (int i : components[k])
            if (room_of_[i] >= 0) ++counts[room_of_[i]];
        for (const auto& [old, n] : counts) overlaps.push_back({n, old, static_cast<int>(k)});
    }
    std::sort(overlaps.begin(), overlaps.end(), [](const Overlap& a, const Overlap& b) {
        if (a.count != b.count) return a.count > b.count;
        if (a.old_id != b.old_id) return a.old_id < b.old_id;
        return a.comp < b.comp;
    });
    std::vector<int> new_id(components.size(), -1);
    std::set<int> taken;
    for (const auto& ov : overlaps) {
        if (new_id[static_cast<std::size_t>(ov.comp)] >= 0 || taken.count(ov.old_id)) continue;
        new_id[static_cast<std::size_t>(ov.comp)] = ov.old_id;
        taken.insert(ov.old_id);
    }
    for (auto& id : new_id)
        if (id < 0) id = next_room_++;

    std::map<int, RoomNode> rooms;
    room_of_.fill(-1);
    for (std::size_t k = 0; k < components.size(); ++k) {
        RoomNode node;
        const int id = new_id[k];
        auto old = rooms_.find(id);
        if (old != rooms_.end()) {
            node.category = old->second.category;
            node.labelled_view = old->second.labelled_view;
            node.best_view = old->second.best_view;
        }
        node.id = id;
        node.mask = std::move(components[k]);
        for (int i : node.mask) room_of_[i] = id;
        rooms.emplace(id, std::move(node));
    }
    rooms_ = std::move(rooms);

    for (auto& [_, vp] : viewpoints_) vp.room = room_at(cell_at(vp.pose.position(), resolution_));
    for (auto& [_, o] : objects_) assign_object_room(o);

    // Door detection: adjacent rooms whose shared boundary is no wider than a door.
    std::map<std::pair<int, int>, std::set<int>> boundary;
    for (int i = 0; i < room_of_.size(); ++i) {
        const int a = room_of_[i];
        if (a < 0) continue;
        const Cell c = room_of_.cell(i);
        for (Cell n : {Cell{c.x + 1, c.y}, Cell{c.x, c.y + 1}, Cell{c.x - 1, c.y}, Cell{c.x, c.y - 1}}) {
            const int b = room_at(n);
            if (b < 0 || b == a) continue;
            boundary[{std::min(a, b), std::max(a, b)}].insert(a < b ? i : room_of_.index(n));
        }
    }
    rr_.clear();
    const int max_width = static_cast<int>(std::ceil(params_.door_width_max / resolution_ - 1e-9)) + 2;
    for (const auto& [pair, cells] : boundary)
        if (static_cast<int>(cells.size()) <= max_width) rr_.insert(pair);

    refresh_best_views();
    ++room_revision_;
}

void SceneRep::refresh_best_views() {
    for (auto& [_, room] : rooms_) {
        room.best_view_cells = 0;
        room.best_view = -1;
    }
    for (const auto& [vid, vp] : viewpoints_) {
        std::map<int, int> per_room;
        for (const auto& vc : vp.observation.visible) {
            const int r = room_at(vc.cell);
            if (r >= 0) ++per_room[r];
        }
        for (const auto& [r, n] : per_room) {
            RoomNode& room = rooms_.at(r);
            if (n > room.best_view_cells) {
                room.best_view = vid;
                room.best_view_cells = n;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// On-demand inference
// ---------------------------------------------------------------------------

int SceneRep::update_room_labels(Reasoner& reasoner) {
    int queries = 0;
    for (auto& [id, room] : rooms_) {
        if (room.best_view < 0 || room.best_view == room.labelled_view) continue;
        const ViewpointNode& vp = viewpoints_.at(room.best_view);
        RoomLabelContext ctx;
        ctx.room_id = id;
        ctx.observation.pose = vp.observation.pose;
        for (const auto& vc : vp.observation.visible)
            if (room_at(vc.cell) == id) ctx.observation.visible.push_back(vc);
        room.category = reasoner.classify_room(ctx);
        room.labelled_view = room.best_view;
        ++queries;
    }
    return queries;
}

namespace {

ObjectSummary summarize(const ObjectNode& node) { return {node.id, node.category, node.cells}; }

}  // namespace

int SceneRep::infer_attribute_on_demand(const std::string& category, const AttrEq& constraint, Reasoner& reasoner) {
    int queries = 0;
    for (auto& [id, node] : objects_) {
        if (node.category != category || node.attributes.count(constraint.name) || node.best_view < 0) continue;
        AttributeContext ctx{viewpoints_.at(node.best_view).observation, summarize(node), constraint.name};
        // Unknown answers are not cached so a later view can retry.
        if (auto answer = reasoner.infer_attribute(ctx)) node.attributes[constraint.name] = std::move(answer);
        ++queries;
    }
    return queries;
}

RelationResult SceneRep::infer_relation_on_demand(int subject, int other, const std::string& relation,
                                                  Reasoner& reasoner, int* queries) {
    for (const auto& e : oo_)
        if (e.subject == subject && e.other == other && e.relation == relation) return RelationResult::Confirmed;
    const auto key = std::make_tuple(subject, other, relation);
    if (auto it = relation_cache_.find(key); it != relation_cache_.end())
        return it->second == Verdict::False ? RelationResult::Rejected : RelationResult::Undetermined;
    const auto views = co_observing(subject, other);
    if (views.empty()) return RelationResult::Undetermined;
    // The view seeing the most of both objects.
    int best = views.front(), best_n = -1;
    for (int v : views) {
        const auto& oc = viewpoints_.at(v).object_cells;
        const int n = std::min(oc.at(subject), oc.at(other));
        if (n > best_n) {
            best = v;
            best_n = n;
        }
    }
    RelationContext ctx{viewpoints_.at(best).observation, summarize(objects_.at(subject)), summarize(objects_.at(other)),
                        relation};
    const Verdict v = reasoner.check_relation(ctx);
    if (queries) ++*queries;
    if (v == Verdict::True) {
        oo_.insert({subject, other, relation});
        return RelationResult::Confirmed;
    }
    if (v == Verdict::False) {
        relation_cache_[key] = v;
        return RelationResult::Rejected;
    }
    return RelationResult::Undetermined;
}

// ---------------------------------------------------------------------------
// Contexts and export
// ---------------------------------------------------------------------------

RoomSummary SceneRep::summarize_room(int id, double distance) const {
    RoomSummary s;
    s.id = id;
    if (const RoomNode* r = room(id)) s.category = r->category;
    for (const auto& [_, o] : objects_)
        if (o.room == id) s.objects.push_back(o.category);
    s.distance = distance;
    return s;
}

EarlyStopContext SceneRep::build_early_stop(int current, int candidate, const Goal& goal) const {
    return {summarize_room(current), summarize_room(candidate), goal};
}

RoomQueryContext SceneRep::build_room_query(const std::vector<int>& uncovered, const std::map<int, double>& distances,
                                            const std::vector<int>& visits, const Goal& goal) const {
    RoomQueryContext ctx;
    for (int id : uncovered) {
        auto it = distances.find(id);
        ctx.uncovered.push_back(summarize_room(id, it == distances.end() ? -1.0 : it->second));
    }
    ctx.trajectory = visits;
    ctx.goal = goal;
    return ctx;
}

json SceneRep::snapshot() const {
    json rooms = json::array();
    for (const auto& [id, r] : rooms_) {
        // Row runs [x0, y, x1, y] keep masks compact.
        json runs = json::array();
        std::size_t i = 0;
        while (i < r.mask.size()) {
            std::size_t j = i;
            while (j + 1 < r.mask.size() && r.mask[j + 1] == r.mask[j] + 1 &&
                   room_of_.cell(r.mask[j + 1]).y == room_of_.cell(r.mask[i]).y)
                ++j;
            const Cell a = room_of_.cell(r.mask[i]), b = room_of_.cell(r.mask[j]);
            runs.push_back({a.x, a.y, b.x, b.y});
            i = j + 1;
        }
        rooms.push_back({{"id", id}, {"category", r.category}, {"best_view", r.best_view}, {"cells", runs}});
    }
    json views = json::array();
    for (const auto& [id, v] : viewpoints_)
        views.push_back({{"id", id}, {"pose", pose_to_json(v.pose)}, {"room", v.room}, {"coverage", v.coverage.size()}});
    json objects = json::array();
    for (const auto& [id, o] : objects_) {
        json attrs = json::object();
        for (const auto& [k, v] : o.attributes) attrs[k] = v ? json(*v) : json(nullptr);
        objects.push_back({{"id", id},
                           {"category", o.category},
                           {"confidence", o.confidence},
                           {"bbox", {o.lo.x, o.lo.y, o.hi.x, o.hi.y}},
                           {"cells", o.cells.size()},
                           {"best_view", o.best_view},
                           {"room", o.room},
                           {"attributes", attrs}});
    }
    json rr = json::array(), rv = json::array(), ro = json::array(), vo = json::array(), oo = json::array();
    for (const auto& [a, b] : rr_) rr.push_back({a, b});
    for (const auto& [id, v] : viewpoints_)
        if (v.room >= 0) rv.push_back({v.room, id});
    for (const auto& [id, o] : objects_)
        if (o.room >= 0) ro.push_back({o.room, id});
    for (const auto& [v, o] : vo_) vo.push_back({v, o});
    for (const auto& e : oo_) oo.push_back({e.subject, e.other, e.relation});
    return {{"rooms", rooms},
            {"viewpoints", views},
            {"objects", objects},
            {"edges", {{"room_room", rr}, {"room_view", rv}, {"room_object", ro}, {"view_object", vo}, {"object_object", oo}}}};
}

}  // namespace roomnav
