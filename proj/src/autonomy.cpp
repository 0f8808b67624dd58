#include "roomnav/autonomy.hpp"

#include "roomnav/grid_search.hpp"

#include <algorithm>

namespace roomnav {

// ---------------------------------------------------------------------------
// Inflation
// ---------------------------------------------------------------------------

InflatedMap::InflatedMap(int width, int height, double radius_m, double resolution)
    : disc_(disc_offsets(radius_m / resolution)),
      seen_(width, height, Belief::Unknown),
      blocked_(width, height, static_cast<int>(disc_.size())),
      passable_(width, height, 0) {}

void InflatedMap::adjust(Cell c, int delta) {
    for (const Cell& o : disc_) {
        const Cell n{c.x + o.x, c.y + o.y};
        if (!blocked_.in_bounds(n)) continue;
        blocked_[n] += delta;
        passable_[n] = blocked_[n] == 0 ? 1 : 0;
    }
}

void InflatedMap::update(const Grid<Belief>& belief) {
    for (int i = 0; i < belief.size(); ++i) {
        const bool was_free = seen_[i] == Belief::Free;
        const bool is_free = belief[i] == Belief::Free;
        seen_[i] = belief[i];
        if (was_free == is_free) continue;
        adjust(belief.cell(i), is_free ? -1 : 1);
    }
}

bool traversable(const Grid<Belief>& belief, Cell c, const EmbodimentProfile& profile, double resolution) {
    for (const Cell& o : disc_offsets(profile.radius / resolution)) {
        const Cell n{c.x + o.x, c.y + o.y};
        if (!belief.in_bounds(n) || belief[n] != Belief::Free) return false;
    }
    return true;
}

Mask inflate(const Grid<Belief>& belief, double radius_m, double resolution) {
    EmbodimentProfile p;
    p.radius = radius_m;
    Mask m(belief.width(), belief.height(), 0);
    for (int i = 0; i < belief.size(); ++i) m[i] = traversable(belief, belief.cell(i), p, resolution) ? 1 : 0;
    return m;
}

// ---------------------------------------------------------------------------
// Planning
// ---------------------------------------------------------------------------

std::optional<LocalPath> plan_local_path(const Mask& passable, const Pose& pose, Cell waypoint, double resolution) {
    const Cell start = cell_at(pose.position(), resolution);
    if (start == waypoint) return LocalPath{};
    const auto path = astar(passable, start, waypoint);
    if (!path) return std::nullopt;
    return LocalPath{path->cells, path->cost * resolution};
}

std::optional<LocalPath> plan_local_path(const Grid<Belief>& belief, const Pose& pose, Cell waypoint,
                                         const EmbodimentProfile& profile, double resolution) {
    return plan_local_path(inflate(belief, profile.radius, resolution), pose, waypoint, resolution);
}

std::optional<LocalPath> plan_path_to_any(const Mask& passable, const Pose& pose, const Mask& goals, double resolution) {
    const Cell start = cell_at(pose.position(), resolution);
    if (goals.in_bounds(start) && goals[start]) return LocalPath{};
    const auto path = search_to_any(passable, start, goals);
    if (!path) return std::nullopt;
    return LocalPath{path->cells, path->cost * resolution};
}

// ---------------------------------------------------------------------------
// Following
// ---------------------------------------------------------------------------

namespace {

MotionCommand steer_to(const Vec2& target, const AgentState& state, const EmbodimentProfile& profile,
                       double remaining, const ControllerParams& params) {
    const Vec2 p = state.pose.position();
    const Vec2 d = target - p;
    const double e = wrap_angle(std::atan2(d.y(), d.x()) - state.pose.theta);
    if (std::abs(e) > params.rotate_threshold) return {0.0, e > 0 ? profile.omega_max : -profile.omega_max};
    const double omega = std::clamp(params.heading_gain * e, -profile.omega_max, profile.omega_max);
    double v = profile.v_max;
    const double ld = d.norm();
    if (ld > 1e-9) {
        const double kappa = std::abs(2.0 * std::sin(e) / ld);
        if (kappa > 1e-9) v = std::min(v, profile.omega_max / kappa);
    }
    v = std::min(v, remaining / params.dt);
    return {std::max(0.0, v), omega};
}

bool arc_safe(const Pose& pose, const MotionCommand& cmd, double dt, const Mask& passable, double resolution) {
    for (const Cell& c : swept_cells(pose, cmd.v, cmd.omega, dt, resolution))
        if (!passable.in_bounds(c) || !passable[c]) return false;
    return true;
}

bool straight_safe(const Vec2& from, const Vec2& to, const Mask& passable, double resolution) {
    const Vec2 d = to - from;
    const Pose pose{from.x(), from.y(), std::atan2(d.y(), d.x())};
    return arc_safe(pose, {d.norm(), 0.0}, 1.0, passable, resolution);
}

}  // namespace

namespace {

constexpr double kCentreTol = 0.02;  // m
constexpr std::size_t kSightCells = 15;

/// Turns exactly onto `target` when possible, otherwise drives straight to it.
MotionCommand precise_to(const Vec2& target, const AgentState& state, const EmbodimentProfile& profile, double dt) {
    const Vec2 d = target - state.pose.position();
    const double e = wrap_angle(std::atan2(d.y(), d.x()) - state.pose.theta);
    if (std::abs(e) > 1e-3) return {0.0, std::clamp(e / dt, -profile.omega_max, profile.omega_max)};
    return {std::min(profile.v_max, d.norm() / dt), 0.0};
}

}  // namespace

FollowResult follow(const LocalPath& path, FollowState& fs, const AgentState& state,
                    const EmbodimentProfile& profile, const Mask& passable, double resolution,
                    const ControllerParams& params) {
    FollowResult out;
    const Vec2 p = state.pose.position();
    if (path.cells.empty()) {
        out.status = FollowStatus::Arrived;
        return out;
    }
    const std::size_t n = path.cells.size();
    auto center = [&](std::size_t i) { return cell_center(path.cells[i], resolution); };
    fs.cursor = std::min(fs.cursor, n - 1);
    for (std::size_t i = fs.cursor + 1; i < n; ++i)
        if (!passable.in_bounds(path.cells[i]) || !passable[path.cells[i]]) {
            out.status = FollowStatus::Replan;
            return out;
        }

    // Pure pursuit proposal.
    std::size_t best = fs.cursor;
    double best_d = (center(fs.cursor) - p).norm();
    for (std::size_t i = fs.cursor + 1; i < std::min(n, fs.cursor + 12); ++i) {
        const double d = (center(i) - p).norm();
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    if (!fs.precise) fs.cursor = best;
    const std::size_t cur = fs.precise ? fs.cursor : best;
    double remaining = (center(cur) - p).norm();
    for (std::size_t i = cur + 1; i < n; ++i) remaining += (center(i) - center(i - 1)).norm();
    if (cur + 1 == n && (center(cur) - p).norm() <= params.arrive_tolerance) {
        out.status = FollowStatus::Arrived;
        return out;
    }
    // Shorter lookaheads track tight paths more closely; the first safe arc wins.
    MotionCommand pursuit;
    bool pursuit_ok = false;
    for (double frac : {1.0, 0.5, 0.25}) {
        const double reach = std::max(params.lookahead * frac, resolution);
        std::size_t look = n - 1;
        for (std::size_t i = cur; i < n; ++i)
            if ((center(i) - p).norm() >= reach) {
                look = i;
                break;
            }
        pursuit = steer_to(center(look), state, profile, remaining, params);
        pursuit_ok = arc_safe(state.pose, pursuit, params.dt, passable, resolution);
        if (pursuit_ok) break;
    }

    // Farthest path cell from `lo` on that a straight drive reaches safely.
    auto farthest_in_sight = [&](std::size_t lo) {
        for (std::size_t j = std::min(n - 1, lo + kSightCells); j > lo; --j)
            if (straight_safe(p, center(j), passable, resolution)) return j;
        return lo;
    };

    if (!fs.precise) {
        if (pursuit_ok) {
            out.cmd = pursuit;
            return out;
        }
        // Enter precise mode from the path cell we stand in.
        const Cell here = cell_at(p, resolution);
        std::size_t k = n;
        for (std::size_t i = 0; i < n; ++i)
            if (path.cells[i] == here) {
                k = i;
                break;
            }
        if (k == n) {
            out.status = FollowStatus::Replan;
            return out;
        }
        fs.precise = true;
        fs.cursor = k;
        fs.target = farthest_in_sight(k);
    }

    // Precise mode.
    while ((center(fs.target) - p).norm() < kCentreTol) {
        fs.cursor = fs.target;
        if (fs.target + 1 == n) {
            out.status = FollowStatus::Arrived;
            fs.precise = false;
            return out;
        }
        fs.target = farthest_in_sight(fs.target + 1);
        // Back to pursuit once it is safe and does not need a turn in place.
        if (pursuit_ok && pursuit.v > 0.0) {
            fs.precise = false;
            out.cmd = pursuit;
            return out;
        }
    }
    MotionCommand cmd = precise_to(center(fs.target), state, profile, params.dt);
    if (!arc_safe(state.pose, cmd, params.dt, passable, resolution) && fs.target > fs.cursor + 1) {
        // The sampled sweep can reject a grazing line the sight test passed; step one cell instead.
        fs.target = fs.cursor + 1;
        cmd = precise_to(center(fs.target), state, profile, params.dt);
    }
    if (!arc_safe(state.pose, cmd, params.dt, passable, resolution)) {
        fs.precise = false;
        out.status = FollowStatus::Replan;
        return out;
    }
    out.cmd = cmd;
    return out;
}

// ---------------------------------------------------------------------------
// Executor
// ---------------------------------------------------------------------------

Executor::Executor(EmbodimentProfile profile, ControllerParams params, int width, int height, double resolution)
    : profile_(std::move(profile)),
      params_(params),
      resolution_(resolution),
      map_(width, height, profile_.radius, resolution) {}

void Executor::reset() {
    have_path_ = false;
    key_ = -1;
    path_ = {};
    follow_ = {};
    idle_ticks_ = 0;
    best_remaining_ = kInf;
}

Executor::Step Executor::drive(const AgentState& state, Cell goal) {
    Mask goals(map_.passable().width(), map_.passable().height(), 0);
    if (goals.in_bounds(goal)) goals[goal] = 1;
    return drive(state, goals, static_cast<long>(goals.index(goal)) + (1L << 40));
}

Executor::Step Executor::drive(const AgentState& state, const Mask& goals, long key) {
    Step out;
    const Cell here = cell_at(state.pose.position(), resolution_);
    auto replan = [&]() {
        ++plans_;
        follow_ = {};
        const auto p = plan_path_to_any(map_.passable(), state.pose, goals, resolution_);
        have_path_ = p.has_value();
        if (p) path_ = *p;
        return have_path_;
    };
    if (key != key_) {
        key_ = key;
        have_path_ = false;
        idle_ticks_ = 0;
        best_remaining_ = kInf;
    }
    if (!have_path_ && !replan()) {
        out.status = Status::Unreachable;
        return out;
    }
    if (path_.cells.empty() && goals.in_bounds(here) && goals[here]) {
        out.status = Status::Arrived;
        return out;
    }
    FollowResult f = follow(path_, follow_, state, profile_, map_.passable(), resolution_, params_);
    if (f.status == FollowStatus::Replan) {
        if (!replan()) {
            out.status = Status::Unreachable;
            return out;
        }
        f = follow(path_, follow_, state, profile_, map_.passable(), resolution_, params_);
    }
    if (f.status == FollowStatus::Arrived) {
        out.status = Status::Arrived;
        return out;
    }

    // Progress is measured as the best distance to the path end seen so far.
    const double remaining = path_.cells.empty()
                                 ? 0.0
                                 : (cell_center(path_.cells.back(), resolution_) - state.pose.position()).norm() +
                                       static_cast<double>(path_.cells.size() - follow_.cursor) * resolution_;
    if (remaining < best_remaining_ - 0.02) {
        best_remaining_ = remaining;
        idle_ticks_ = 0;
    } else if (++idle_ticks_ > params_.stuck_ticks) {
        reset();
        out.status = Status::Stuck;
        return out;
    }
    out.cmd = f.cmd;
    out.status = Status::Moving;
    return out;
}

}  // namespace roomnav
