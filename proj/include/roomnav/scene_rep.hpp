#pragma once

#include "roomnav/gridworld.hpp"
#include "roomnav/reasoner.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace roomnav {

enum class Belief : std::uint8_t { Unknown = 0, Free = 1, Occupied = 2 };

struct SceneParams {
    double d_cover = 3.0;       // m
    int viewpoint_eps = 25;     // cells of novel coverage needed to admit a viewpoint
    int dilation_radius = -1;   // cells; negative derives it from door_width_max
    double door_width_max = 1.2;
    double merge_distance = 0.5;  // m, centroid distance merging same-category detections
    double min_room_area = 1.0;   // m^2, smaller components are not rooms

    int effective_dilation(double resolution) const;
};

struct RoomNode {
    int id = -1;
    std::vector<int> mask;  // sorted cell indices
    std::string category;   // empty = Unlabeled
    int best_view = -1;
    int best_view_cells = 0;
    int labelled_view = -2;  // best_view used for the last classification
};

struct ViewpointNode {
    int id = -1;
    Pose pose;
    std::vector<int> coverage;  // sorted cell indices
    Observation observation;
    std::map<int, int> object_cells;  // object node -> visible footprint cells in this view
    int room = -1;
};

struct ObjectNode {
    int id = -1;
    std::string category;
    double confidence = 0.0;
    std::vector<Cell> cells;  // sorted (y, x)
    Cell lo, hi;              // inclusive bounds of cells
    int best_view = -1;
    int best_view_cells = 0;
    /// Cached reasoner answers. Unknown answers are not stored.
    std::map<std::string, std::optional<std::string>> attributes;
    int room = -1;

    Vec2 centroid(double resolution) const;
    bool contains(Cell c) const;
};

struct RelationEdge {
    int subject = -1;
    int other = -1;
    std::string relation;
    friend auto operator<=>(const RelationEdge&, const RelationEdge&) = default;
};

enum class RelationResult { Confirmed, Rejected, Undetermined };

/// The agent's three-layer scene graph plus its occupancy belief.
class SceneRep {
public:
    SceneRep() = default;
    SceneRep(int width, int height, double resolution, SceneParams params = {});

    const SceneParams& params() const { return params_; }
    double resolution() const { return resolution_; }
    int width() const { return belief_.width(); }
    int height() const { return belief_.height(); }

    const Grid<Belief>& belief() const { return belief_; }
    Belief known(Cell c) const { return belief_.in_bounds(c) ? belief_[c] : Belief::Occupied; }
    bool known_free(Cell c) const { return known(c) == Belief::Free; }
    std::uint64_t belief_revision() const { return belief_revision_; }
    std::uint64_t room_revision() const { return room_revision_; }

    /// Fuses one observation. Returns the object node each detection was merged into.
    std::vector<int> integrate_observation(const Observation& obs);

    /// Admits a viewpoint iff |C_t \ C_prev| > eps. The observation must be the one
    /// most recently integrated, its detections link the viewpoint to object nodes.
    std::optional<int> maybe_add_viewpoint(const Pose& pose, const Observation& obs);
    /// Admits a viewpoint unconditionally (used when verification needs one).
    int force_viewpoint(const Pose& pose, const Observation& obs);
    /// Cells of `obs` within d_cover of `pose`.
    std::vector<int> coverage_cells(const Pose& pose, const Observation& obs) const;
    const Mask& covered() const { return covered_; }
    int covered_count() const { return covered_count_; }

    /// Cells seen within d_cover from any integrated pose.
    const Mask& trajectory_covered() const { return traj_covered_; }
    const std::vector<Pose>& trajectory() const { return trajectory_; }
    /// Adds cell indices to the trajectory coverage.
    void mark_trajectory_covered(const std::vector<int>& cells);

    void segment_rooms();
    void segment_rooms(int dilation_radius);

    /// Room whose mask holds `c`, or -1.
    int room_at(Cell c) const { return room_of_.in_bounds(c) ? room_of_[c] : -1; }
    const Grid<int>& room_grid() const { return room_of_; }

    const std::map<int, RoomNode>& rooms() const { return rooms_; }
    const std::map<int, ViewpointNode>& viewpoints() const { return viewpoints_; }
    const std::map<int, ObjectNode>& objects() const { return objects_; }
    const RoomNode* room(int id) const;
    const ObjectNode* object(int id) const;

    const std::set<std::pair<int, int>>& room_edges() const { return rr_; }
    const std::set<std::pair<int, int>>& view_object_edges() const { return vo_; }
    const std::set<RelationEdge>& relation_edges() const { return oo_; }
    /// Viewpoints linked to both objects.
    std::vector<int> co_observing(int a, int b) const;

    /// Classifies rooms whose best view changed since their last label. Returns queries issued.
    int update_room_labels(Reasoner& reasoner);
    /// Fills attributes[name] for every node of `category` that has a best view and
    /// no cached answer. Returns queries issued.
    int infer_attribute_on_demand(const std::string& category, const AttrEq& constraint, Reasoner& reasoner);
    RelationResult infer_relation_on_demand(int subject, int other, const std::string& relation, Reasoner& reasoner,
                                            int* queries = nullptr);

    RoomSummary summarize_room(int id, double distance = -1.0) const;
    EarlyStopContext build_early_stop(int current, int candidate, const Goal& goal) const;
    RoomQueryContext build_room_query(const std::vector<int>& uncovered, const std::map<int, double>& distances,
                                      const std::vector<int>& visits, const Goal& goal) const;

    /// JSON {rooms, viewpoints, objects, edges} without raw observations.
    nlohmann::json snapshot() const;

private:
    void merge_objects(int keep, int drop);
    void refresh_best_views();
    void assign_object_room(ObjectNode& node) const;
    int add_viewpoint(const Pose& pose, const Observation& obs, std::vector<int> coverage);

    SceneParams params_;
    double resolution_ = 0.1;
    Grid<Belief> belief_;
    Mask covered_;
    int covered_count_ = 0;
    Mask traj_covered_;
    Grid<int> room_of_;
    std::vector<Pose> trajectory_;

    std::map<int, RoomNode> rooms_;
    std::map<int, ViewpointNode> viewpoints_;
    std::map<int, ObjectNode> objects_;
    std::set<std::pair<int, int>> rr_;
    std::set<std::pair<int, int>> vo_;  // (viewpoint, object)
    std::set<RelationEdge> oo_;
    std::map<std::tuple<int, int, std::string>, Verdict> relation_cache_;

    std::vector<int> last_nodes_;
    Pose last_pose_;
    int next_room_ = 0;
    int next_view_ = 0;
    int next_object_ = 0;
    std::uint64_t belief_revision_ = 0;
    std::uint64_t room_revision_ = 0;
};

}  // namespace roomnav
