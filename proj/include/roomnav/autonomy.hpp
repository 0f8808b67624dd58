#pragma once

#include "roomnav/gridworld.hpp"
#include "roomnav/scene_rep.hpp"

#include <optional>
#include <vector>

namespace roomnav {

struct ControllerParams {
    double lookahead = 0.5;        // m
    double rotate_threshold = kPi / 3.0;
    double heading_gain = 2.0;
    double dt = 0.1;               // s
    double arrive_tolerance = 0.1;  // m
    int stuck_ticks = 40;          // ticks without progress before giving up on a goal
};

/// Clearance under radius inflation, maintained incrementally as the belief changes.
class InflatedMap {
public:
    InflatedMap() = default;
    InflatedMap(int width, int height, double radius_m, double resolution);

    /// Re-synchronises with `belief`, touching only cells that changed.
    void update(const Grid<Belief>& belief);
    const Mask& passable() const { return passable_; }
    bool passable(Cell c) const { return passable_.in_bounds(c) && passable_[c]; }

private:
    void adjust(Cell c, int delta);

    std::vector<Cell> disc_;
    Grid<Belief> seen_;
    Grid<int> blocked_;  // non-Free cells (or off-grid cells) within the disc
    Mask passable_;
};

/// True iff every cell within `profile.radius` of `c` is Free in `belief`.
bool traversable(const Grid<Belief>& belief, Cell c, const EmbodimentProfile& profile, double resolution);

/// Full inflation of `belief`, the reference the incremental map must match.
Mask inflate(const Grid<Belief>& belief, double radius_m, double resolution);

struct LocalPath {
    std::vector<Cell> cells;  // pose cell .. waypoint, empty when already there
    double cost = 0.0;        // m
};

/// A* on the inflated belief; nullopt when the waypoint is unreachable.
std::optional<LocalPath> plan_local_path(const Mask& passable, const Pose& pose, Cell waypoint, double resolution);
std::optional<LocalPath> plan_local_path(const Grid<Belief>& belief, const Pose& pose, Cell waypoint,
                                         const EmbodimentProfile& profile, double resolution);
/// Cheapest path to any flagged goal cell.
std::optional<LocalPath> plan_path_to_any(const Mask& passable, const Pose& pose, const Mask& goals, double resolution);

enum class FollowStatus { Moving, Arrived, Replan };

struct FollowResult {
    MotionCommand cmd;
    FollowStatus status = FollowStatus::Moving;
};

/// Cursor into a path plus the controller mode.
struct FollowState {
    std::size_t cursor = 0;    // index of the closest path cell
    bool precise = false;      // cell-by-cell tracking near obstacles
    std::size_t target = 0;    // precise mode: path cell being approached
};

/// Pure pursuit along `path`. Commands are screened against `passable` so
/// that every cell the arc enters stays traversable. When the pursuit arc is
/// not safe the follower switches to precise mode, which turns in place and
/// drives straight from cell centre to cell centre until pursuit is safe again.
FollowResult follow(const LocalPath& path, FollowState& fs, const AgentState& state,
                    const EmbodimentProfile& profile, const Mask& passable, double resolution,
                    const ControllerParams& params = {});

/// Waypoint executor: owns the current path and replans when it is blocked.
class Executor {
public:
    Executor() = default;
    Executor(EmbodimentProfile profile, ControllerParams params, int width, int height, double resolution);

    enum class Status { Idle, Moving, Arrived, Unreachable, Stuck };

    struct Step {
        MotionCommand cmd;
        Status status = Status::Idle;
    };

    void update_map(const Grid<Belief>& belief) { map_.update(belief); }
    const Mask& passable() const { return map_.passable(); }
    bool passable(Cell c) const { return map_.passable(c); }

    /// Drives toward the nearest cell flagged in `goals`. `key` identifies the
    /// goal; a new key forces a fresh plan.
    Step drive(const AgentState& state, const Mask& goals, long key);
    Step drive(const AgentState& state, Cell goal);
    void reset();

    const LocalPath& path() const { return path_; }
    int plans() const { return plans_; }

private:
    EmbodimentProfile profile_;
    ControllerParams params_;
    double resolution_ = 0.1;
    InflatedMap map_;
    LocalPath path_;
    FollowState follow_;
    long key_ = -1;
    bool have_path_ = false;
    int plans_ = 0;
    int idle_ticks_ = 0;
    double best_remaining_ = kInf;
};

}  // namespace roomnav
