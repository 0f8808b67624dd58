#pragma once

#include "roomnav/scene_rep.hpp"
#include "roomnav/tsp.hpp"

#include <Eigen/Core>
#include <json.hpp>

#include <algorithm>
#include <functional>
#include <optional>
#include <set>
#include <vector>

namespace roomnav {

struct PlannerParams {
    double d_cover = 3.0;       // m
    int delta = 3;              // minimum coverage score, cells
    int restarts = 8;           // K
    double window = 8.0;        // L, m
    double spacing = -1.0;      // lattice spacing, m; negative = d_cover / 2
    double jitter = 0.2;        // cells
    double reach_radius = 0.15; // m, a tour site counts as visited within this distance
    std::uint64_t seed = 0;

    double effective_spacing() const { return spacing > 0.0 ? spacing : d_cover / 2.0; }
    /// Radius a site is credited with, so any stop within reach_radius still sees it.
    double site_radius() const { return std::max(0.0, d_cover - reach_radius); }
};

struct SurfaceSet {
    std::vector<int> surface;  // S, cell indices
    Mask uncovered;            // S-hat as a mask over the grid
    int uncovered_count = 0;
};

/// S = known-Free cells of `room_mask` 4-adjacent to Occupied or Unknown cells;
/// S-hat = S minus `covered` (when given).
SurfaceSet compute_surface(const Grid<Belief>& belief, const Mask& room_mask, const Mask* covered = nullptr);

/// S-cells strictly within d_cover of `candidate` with line of sight through known-Free cells.
std::vector<int> coverage_of(Cell candidate, const std::vector<int>& surface, double d_cover_m, double resolution,
                             const Grid<Belief>& belief);

int coverage_score(const std::vector<int>& cells, const Mask& uncovered);

struct Selection {
    std::vector<int> chosen;  // indices into the candidate list, in draw order
    Mask uncovered;           // S-hat after removing the chosen coverage
    std::vector<int> scores;  // w_cov of each chosen candidate at its draw
};

/// Draws candidates with probability proportional to w_cov among those with
/// w_cov >= delta, removing their coverage, until no candidate reaches delta.
Selection select_candidates(const std::vector<std::vector<int>>& coverage, const Mask& uncovered, int delta, Rng& rng);

/// Symmetric path-length matrix (m) over [start, sites...] on `passable`;
/// unreachable pairs are infinite.
Eigen::MatrixXd site_distances(const Mask& passable, Cell start, const std::vector<Cell>& sites, double resolution);

struct TourPlan {
    std::vector<int> order;  // candidate indices in visiting order
    double cost = 0.0;
    Mask uncovered;          // S-hat left after the winning selection
    int restart = -1;
};

/// K restarts of {select_candidates with its own rng stream, nearest neighbour,
/// 2-opt}; the cheapest tour wins. `dist` row/column 0 is the start.
TourPlan plan_tour(const std::vector<std::vector<int>>& coverage, const Mask& uncovered, const Eigen::MatrixXd& dist,
                   int delta, int restarts, std::uint64_t seed);

struct ExplorationPlan {
    std::vector<Cell> local_tour;
    std::vector<Cell> global_sites;  // sites that left the window, in global tour order
    std::vector<Cell> waypoints;     // local_tour ++ global tour
    Vec2 window_center = Vec2::Zero();
    double cost = 0.0;
};

/// Rolling-window coverage planner for one room. State is kept between calls so
/// that a partially explored room resumes where it left off.
class RoomExplorer {
public:
    RoomExplorer(int room, PlannerParams params);

    struct Output {
        std::optional<Cell> waypoint;
        bool covered = false;
        bool replanned = false;
    };

    /// `passable` is the robot-inflated traversable belief.
    Output tick(SceneRep& rep, const Mask& passable, const Pose& pose);

    /// The executor could not reach the current waypoint.
    void drop_current();
    void invalidate() { need_plan_ = true; }

    int room() const { return room_; }
    bool covered() const { return covered_; }
    const ExplorationPlan& plan() const { return plan_; }
    int plans() const { return plans_; }
    nlohmann::json debug_dump() const;

private:
    void replan(const SceneRep& rep, const Mask& passable, const Pose& pose);
    bool front_still_useful(const SceneRep& rep, const Mask& room_mask) const;
    std::optional<Cell> pick_frontier_site(const SceneRep& rep, const Grid<double>& reach, Cell lo, Cell hi,
                                           const std::function<bool(Cell)>& eligible);

    int room_;
    PlannerParams params_;
    ExplorationPlan plan_;
    std::vector<std::vector<int>> waypoint_cov_;  // coverage cells per waypoint
    bool need_plan_ = true;
    bool covered_ = false;
    int plans_ = 0;
    int ticks_since_check_ = 0;
    std::uint64_t checked_revision_ = 0;
    std::vector<int> uncovered_trace_;
    // Pending look into unknown cells the surface cannot see, and frontier cells already tried.
    std::optional<Cell> frontier_site_;
    std::set<int> frontier_tried_;
};

Mask room_mask_of(const SceneRep& rep, int room);

}  // namespace roomnav
