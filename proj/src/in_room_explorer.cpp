#include "roomnav/in_room_explorer.hpp"

#include "roomnav/grid_search.hpp"
#include "roomnav/visibility.hpp"

#include <algorithm>
#include <set>

namespace roomnav {

using nlohmann::json;

Mask room_mask_of(const SceneRep& rep, int room) {
    Mask m(rep.width(), rep.height(), 0);
    if (const RoomNode* r = rep.room(room))
        for (int i : r->mask) m[i] = 1;
    return m;
}

SurfaceSet compute_surface(const Grid<Belief>& belief, const Mask& room_mask, const Mask* covered) {
    SurfaceSet s;
    s.uncovered = Mask(belief.width(), belief.height(), 0);
    for (int i = 0; i < belief.size(); ++i) {
        if (!room_mask[i] || belief[i] != Belief::Free) continue;
        const Cell c = belief.cell(i);
        bool rim = false;
        for (Cell n : {Cell{c.x + 1, c.y}, Cell{c.x - 1, c.y}, Cell{c.x, c.y + 1}, Cell{c.x, c.y - 1}})
            if (!belief.in_bounds(n) || belief[n] != Belief::Free) rim = true;
        if (!rim) continue;
        s.surface.push_back(i);
        if (!covered || !(*covered)[i]) {
            s.uncovered[i] = 1;
            ++s.uncovered_count;
        }
    }
    return s;
}

std::vector<int> coverage_of(Cell candidate, const std::vector<int>& surface, double d_cover_m, double resolution,
                             const Grid<Belief>& belief) {
    std::vector<int> out;
    if (!(d_cover_m > 0.0)) return out;
    const double r_cells = d_cover_m / resolution;
    const Vec2 from = grid_center(candidate);
    auto blocks = [&](Cell c) { return !belief.in_bounds(c) || belief[c] != Belief::Free; };
    for (int i : surface) {
        const Cell c = belief.cell(i);
        if ((grid_center(c) - from).norm() >= r_cells) continue;
        if (line_of_sight(from, c, blocks)) out.push_back(i);
    }
    return out;
}

int coverage_score(const std::vector<int>& cells, const Mask& uncovered) {
    int n = 0;
    for (int i : cells) n += uncovered[i] ? 1 : 0;
    return n;
}

Selection select_candidates(const std::vector<std::vector<int>>& coverage, const Mask& uncovered, int delta, Rng& rng) {
    Selection sel;
    sel.uncovered = uncovered;
    std::vector<int> w(coverage.size());
    std::vector<char> used(coverage.size(), 0);
    while (true) {
        long total = 0;
        for (std::size_t k = 0; k < coverage.size(); ++k) {
            w[k] = used[k] ? 0 : coverage_score(coverage[k], sel.uncovered);
            if (w[k] >= delta) total += w[k];
        }
        if (total == 0) break;
        // Integer draw keeps the choice exact and platform independent.
        long u = static_cast<long>(uniform01(rng) * static_cast<double>(total));
        std::size_t pick = 0;
        for (std::size_t k = 0; k < coverage.size(); ++k) {
            if (w[k] < delta) continue;
            pick = k;
            if (u < w[k]) break;
            u -= w[k];
        }
        used[pick] = 1;
        sel.chosen.push_back(static_cast<int>(pick));
        sel.scores.push_back(w[pick]);
        for (int i : coverage[pick]) sel.uncovered[i] = 0;
    }
    return sel;
}

Eigen::MatrixXd site_distances(const Mask& passable, Cell start, const std::vector<Cell>& sites, double resolution) {
    const int n = static_cast<int>(sites.size()) + 1;
    Eigen::MatrixXd d = Eigen::MatrixXd::Constant(n, n, kInf);
    std::vector<Cell> all{start};
    all.insert(all.end(), sites.begin(), sites.end());
    for (int i = 0; i < n; ++i) {
        const Grid<double> field = distance_field(passable, {all[static_cast<std::size_t>(i)]});
        d(i, i) = 0.0;
        for (int j = i + 1; j < n; ++j) {
            const double v = field[all[static_cast<std::size_t>(j)]] * resolution;
            d(i, j) = v;
            d(j, i) = v;
        }
    }
    return d;
}

TourPlan plan_tour(const std::vector<std::vector<int>>& coverage, const Mask& uncovered, const Eigen::MatrixXd& dist,
                   int delta, int restarts, std::uint64_t seed) {
    TourPlan best;
    best.cost = kInf;
    for (int k = 0; k < std::max(1, restarts); ++k) {
        Rng rng = make_rng(seed, 0x73656c00u + static_cast<std::uint64_t>(k));
        Selection sel = select_candidates(coverage, uncovered, delta, rng);
        std::vector<int> nodes;
        for (int c : sel.chosen) nodes.push_back(c + 1);
        Tour tour = nearest_neighbor_tour(dist, 0, nodes);
        two_opt(dist, 0, tour);
        if (tour.cost < best.cost - 1e-12) {
            best.order.clear();
            for (int node : tour.order) best.order.push_back(node - 1);
            best.cost = tour.cost;
            best.uncovered = std::move(sel.uncovered);
            best.restart = k;
        }
    }
    if (best.restart < 0) best.uncovered = uncovered;
    return best;
}

// ---------------------------------------------------------------------------
// Rolling-window explorer
// ---------------------------------------------------------------------------

RoomExplorer::RoomExplorer(int room, PlannerParams params) : room_(room), params_(params) {}

namespace {

/// Lattice sites over [lo, hi], each snapped to the nearest eligible cell
/// within half a spacing.
std::vector<Cell> lattice_sites(Cell lo, Cell hi, double spacing_cells, double jitter, std::uint64_t seed,
                                const std::function<bool(Cell)>& eligible) {
    std::vector<Cell> out;
    std::set<Cell> seen;
    const int snap = std::max(1, static_cast<int>(spacing_cells / 2.0));
    const int k0x = static_cast<int>(std::floor(lo.x / spacing_cells)), k1x = static_cast<int>(std::ceil(hi.x / spacing_cells));
    const int k0y = static_cast<int>(std::floor(lo.y / spacing_cells)), k1y = static_cast<int>(std::ceil(hi.y / spacing_cells));
    for (int ky = k0y; ky <= k1y; ++ky)
        for (int kx = k0x; kx <= k1x; ++kx) {
            const std::uint64_t h = hash_combine(hash_combine(seed, static_cast<std::uint64_t>(kx) & 0xffffffffu),
                                                 static_cast<std::uint64_t>(ky) & 0xffffffffu);
            const double jx = (hash_unit(h) * 2.0 - 1.0) * jitter;
            const double jy = (hash_unit(h ^ 0x9e3779b97f4a7c15ULL) * 2.0 - 1.0) * jitter;
            const Cell p{static_cast<int>(std::floor(kx * spacing_cells + jx)), static_cast<int>(std::floor(ky * spacing_cells + jy))};
            if (p.x < lo.x || p.x > hi.x || p.y < lo.y || p.y > hi.y) continue;
            std::optional<Cell> best;
            int best_d = 0;
            for (int dy = -snap; dy <= snap; ++dy)
                for (int dx = -snap; dx <= snap; ++dx) {
                    const Cell c{p.x + dx, p.y + dy};
                    const int d = dx * dx + dy * dy;
                    if ((!best || d < best_d) && eligible(c)) {
                        best = c;
                        best_d = d;
                    }
                }
            if (best && seen.insert(*best).second) out.push_back(*best);
        }
    return out;
}

}  // namespace

RoomExplorer::Output RoomExplorer::tick(SceneRep& rep, const Mask& passable, const Pose& pose) {
    Output out;
    if (!rep.room(room_)) {
        covered_ = true;
        out.covered = true;
        return out;
    }
    const double res = rep.resolution();
    const Vec2 p = pose.position();

    // Reached sites count as covered.
    while (!plan_.waypoints.empty() && (cell_center(plan_.waypoints.front(), res) - p).norm() <= params_.reach_radius) {
        if (plan_.waypoints.front() == frontier_site_) frontier_site_.reset();
        rep.mark_trajectory_covered(waypoint_cov_.front());
        plan_.waypoints.erase(plan_.waypoints.begin());
        waypoint_cov_.erase(waypoint_cov_.begin());
        need_plan_ = true;
    }
    if (!need_plan_ && (p - plan_.window_center).norm() >= params_.window / 4.0) need_plan_ = true;
    if (!need_plan_ && !plan_.waypoints.empty() && !waypoint_cov_.front().empty() && ++ticks_since_check_ >= 10 &&
        rep.belief_revision() != checked_revision_) {
        ticks_since_check_ = 0;
        checked_revision_ = rep.belief_revision();
        if (!front_still_useful(rep, room_mask_of(rep, room_))) {
            plan_.waypoints.erase(plan_.waypoints.begin());
            waypoint_cov_.erase(waypoint_cov_.begin());
            need_plan_ = true;
        }
    }
    if (need_plan_ || plan_.waypoints.empty()) {
        replan(rep, passable, pose);
        out.replanned = true;
    }
    out.covered = covered_;
    if (!plan_.waypoints.empty()) out.waypoint = plan_.waypoints.front();
    return out;
}

bool RoomExplorer::front_still_useful(const SceneRep& rep, const Mask& room_mask) const {
    const SurfaceSet s = compute_surface(rep.belief(), room_mask, &rep.trajectory_covered());
    const auto cov = coverage_of(plan_.waypoints.front(), s.surface, params_.site_radius(), rep.resolution(), rep.belief());
    return coverage_score(cov, s.uncovered) >= params_.delta;
}

void RoomExplorer::drop_current() {
    if (!plan_.waypoints.empty()) {
        if (plan_.waypoints.front() == frontier_site_) frontier_site_.reset();
        plan_.waypoints.erase(plan_.waypoints.begin());
        waypoint_cov_.erase(waypoint_cov_.begin());
    }
    need_plan_ = true;
}

void RoomExplorer::replan(const SceneRep& rep, const Mask& passable, const Pose& pose) {
    need_plan_ = false;
    ticks_since_check_ = 0;
    ++plans_;
    const double res = rep.resolution();
    const Mask mask = room_mask_of(rep, room_);
    const SurfaceSet surface = compute_surface(rep.belief(), mask, &rep.trajectory_covered());
    uncovered_trace_.push_back(surface.uncovered_count);

    const Cell start = cell_at(pose.position(), res);
    const Grid<double> reach = distance_field(passable, {start});
    auto eligible = [&](Cell c) { return mask.in_bounds(c) && mask[c] && passable[c] && reach[c] < kInf; };

    // Rolling window: unvisited local sites outside the new window move to the global horizon.
    const Vec2 center = pose.position();
    const double half = params_.window / 2.0;
    auto in_window = [&](Cell c) {
        const Vec2 q = cell_center(c, res);
        return std::abs(q.x() - center.x()) <= half && std::abs(q.y() - center.y()) <= half;
    };
    std::vector<Cell> global = plan_.global_sites;
    for (const Cell& c : plan_.local_tour)
        if (std::find(plan_.waypoints.begin(), plan_.waypoints.end(), c) != plan_.waypoints.end() && !in_window(c) &&
            std::find(global.begin(), global.end(), c) == global.end())
            global.push_back(c);
    plan_.window_center = center;

    const double sp = params_.effective_spacing() / res;
    const int half_cells = static_cast<int>(std::ceil(half / res));
    const std::uint64_t lattice_seed = hash_combine(params_.seed, 0x6c6174u);
    std::vector<Cell> cands = lattice_sites({start.x - half_cells, start.y - half_cells},
                                            {start.x + half_cells, start.y + half_cells}, sp, params_.jitter,
                                            lattice_seed, eligible);
    std::vector<std::vector<int>> cov;
    for (const Cell& c : cands) cov.push_back(coverage_of(c, surface.surface, params_.site_radius(), res, rep.belief()));

    const std::uint64_t plan_seed = hash_combine(params_.seed, static_cast<std::uint64_t>(plans_));
    TourPlan local;
    if (!cands.empty()) {
        const Eigen::MatrixXd dist = site_distances(passable, start, cands, res);
        local = plan_tour(cov, surface.uncovered, dist, params_.delta, params_.restarts, plan_seed);
    } else {
        local.uncovered = surface.uncovered;
    }
    plan_.local_tour.clear();
    std::vector<std::vector<int>> local_cov;
    for (int k : local.order) {
        plan_.local_tour.push_back(cands[static_cast<std::size_t>(k)]);
        local_cov.push_back(cov[static_cast<std::size_t>(k)]);
    }

    // Keep global sites that still see enough of what the local tour leaves uncovered.
    std::vector<Cell> kept;
    std::vector<std::vector<int>> kept_cov;
    Mask left = local.uncovered;
    for (const Cell& c : global) {
        if (!eligible(c)) continue;
        auto cc = coverage_of(c, surface.surface, params_.site_radius(), res, rep.belief());
        if (coverage_score(cc, left) < params_.delta) continue;
        for (int i : cc) left[i] = 0;
        kept.push_back(c);
        kept_cov.push_back(std::move(cc));
    }

    // Nothing left near the robot: look across the whole room before declaring it covered.
    if (plan_.local_tour.empty() && kept.empty()) {
        const RoomNode* room = rep.room(room_);
        Cell lo{rep.width(), rep.height()}, hi{-1, -1};
        for (int i : room->mask) {
            const Cell c = mask.cell(i);
            lo = {std::min(lo.x, c.x), std::min(lo.y, c.y)};
            hi = {std::max(hi.x, c.x), std::max(hi.y, c.y)};
        }
        std::vector<Cell> wide = lattice_sites(lo, hi, sp, params_.jitter, lattice_seed, eligible);
        std::vector<std::vector<int>> wide_cov;
        for (const Cell& c : wide) wide_cov.push_back(coverage_of(c, surface.surface, params_.site_radius(), res, rep.belief()));
        Rng rng = make_rng(plan_seed, 0x77696465u);
        const Selection sel = select_candidates(wide_cov, surface.uncovered, params_.delta, rng);
        for (int k : sel.chosen) {
            kept.push_back(wide[static_cast<std::size_t>(k)]);
            kept_cov.push_back(wide_cov[static_cast<std::size_t>(k)]);
        }
        if (kept.empty()) {
            if (!frontier_site_ || !eligible(*frontier_site_)) frontier_site_ = pick_frontier_site(rep, reach, lo, hi, eligible);
            if (frontier_site_) {
                kept.push_back(*frontier_site_);
                kept_cov.emplace_back();
            }
        }
    } else {
        frontier_site_.reset();
    }

    // Global tour from the end of the local tour.
    plan_.global_sites.clear();
    std::vector<std::vector<int>> global_cov;
    if (!kept.empty()) {
        const Cell from = plan_.local_tour.empty() ? start : plan_.local_tour.back();
        const Eigen::MatrixXd dist = site_distances(passable, from, kept, res);
        std::vector<int> nodes;
        for (std::size_t k = 0; k < kept.size(); ++k)
            if (dist(0, static_cast<int>(k) + 1) < kInf) nodes.push_back(static_cast<int>(k) + 1);
        const Tour tour = solve_open_tour(dist, 0, nodes, params_.restarts, plan_seed);
        for (int node : tour.order) {
            plan_.global_sites.push_back(kept[static_cast<std::size_t>(node - 1)]);
            global_cov.push_back(kept_cov[static_cast<std::size_t>(node - 1)]);
        }
        plan_.cost = local.cost + tour.cost;
    } else {
        plan_.cost = plan_.local_tour.empty() ? 0.0 : local.cost;
    }

    plan_.waypoints = plan_.local_tour;
    plan_.waypoints.insert(plan_.waypoints.end(), plan_.global_sites.begin(), plan_.global_sites.end());
    waypoint_cov_ = local_cov;
    waypoint_cov_.insert(waypoint_cov_.end(), global_cov.begin(), global_cov.end());
    covered_ = plan_.waypoints.empty();
}

std::optional<Cell> RoomExplorer::pick_frontier_site(const SceneRep& rep, const Grid<double>& reach, Cell lo, Cell hi,
                                                     const std::function<bool(Cell)>& eligible) {
    const Grid<Belief>& b = rep.belief();
    const RoomNode* room = rep.room(room_);
    auto inside = [&](Cell c) { return c.x >= lo.x && c.x <= hi.x && c.y >= lo.y && c.y <= hi.y; };
    std::vector<Cell> frontier;
    for (int i : room->mask) {
        if (b[i] != Belief::Free || frontier_tried_.count(i)) continue;
        const Cell c = b.cell(i);
        for (Cell n : {Cell{c.x + 1, c.y}, Cell{c.x - 1, c.y}, Cell{c.x, c.y + 1}, Cell{c.x, c.y - 1}})
            if (inside(n) && b[n] == Belief::Unknown) {
                frontier.push_back(c);
                break;
            }
    }
    const int r = std::max(1, static_cast<int>(std::lround(params_.d_cover / 3.0 / rep.resolution())));
    auto blocks = [&](Cell c) { return !b.in_bounds(c) || b[c] != Belief::Free; };
    std::optional<Cell> best;
    double best_cost = kInf;
    for (const Cell& f : frontier)
        for (int y = f.y - r; y <= f.y + r; ++y)
            for (int x = f.x - r; x <= f.x + r; ++x) {
                const Cell s{x, y};
                if ((x - f.x) * (x - f.x) + (y - f.y) * (y - f.y) > r * r || !eligible(s) || reach[s] >= best_cost) continue;
                if (!line_of_sight(grid_center(s), f, blocks)) continue;
                best = s;
                best_cost = reach[s];
            }
    // Whatever the choice, each frontier cell is looked at once.
    for (const Cell& f : frontier)
        if (!best || (f.x - best->x) * (f.x - best->x) + (f.y - best->y) * (f.y - best->y) <= r * r)
            frontier_tried_.insert(b.index(f));
    return best;
}

json RoomExplorer::debug_dump() const {
    auto cells = [](const std::vector<Cell>& v) {
        json a = json::array();
        for (const Cell& c : v) a.push_back({c.x, c.y});
        return a;
    };
    return {{"room", room_},
            {"local_tour", cells(plan_.local_tour)},
            {"global_sites", cells(plan_.global_sites)},
            {"cost", plan_.cost},
            {"plans", plans_},
            {"uncovered_trace", uncovered_trace_},
            {"covered", covered_}};
}

}  // namespace roomnav
