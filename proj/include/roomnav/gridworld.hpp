#pragma once

#include "roomnav/core.hpp"
#include "roomnav/profile.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace roomnav {

enum class CellLabel : std::uint8_t { Free = 0, Occupied = 1 };

struct RoomInfo {
    int id = 0;
    std::string label;
};

struct Door {
    int id = 0;
    std::vector<Cell> cells;
    std::vector<int> rooms;  // ground-truth rooms the door connects
};

/// Ground-truth occupancy plus evaluation-only room and door annotations.
struct GridMap {
    double resolution = 0.1;
    Grid<CellLabel> cells;
    Grid<int> rooms_gt;  // -1 for Occupied cells
    std::vector<RoomInfo> rooms;
    std::vector<Door> doors;

    int width() const { return cells.width(); }
    int height() const { return cells.height(); }
    bool free(Cell c) const { return cells.in_bounds(c) && cells[c] == CellLabel::Free; }
    const RoomInfo* room(int id) const;
};

struct ObjectInstance {
    int id = 0;
    std::string category;
    std::map<std::string, std::string> attributes;
    std::vector<Cell> footprint;
    int room_id = -1;

    Vec2 centroid(double resolution) const;
};

// ---------------------------------------------------------------------------
// Goals
// ---------------------------------------------------------------------------

struct AttrEq {
    std::string name;
    std::string value;
    friend bool operator==(const AttrEq&, const AttrEq&) = default;
};
struct RelationTo {
    std::string relation;
    std::string other_category;
    friend bool operator==(const RelationTo&, const RelationTo&) = default;
};
struct InRoom {
    std::string room_category;
    friend bool operator==(const InRoom&, const InRoom&) = default;
};
using Constraint = std::variant<AttrEq, RelationTo, InRoom>;

struct Goal {
    std::string category;
    std::vector<Constraint> constraints;
    friend bool operator==(const Goal&, const Goal&) = default;
};

/// Parameters of the 2D geometric relation predicates.
struct RelationRules {
    double near_max_m = 1.5;
    int on_dilation_cells = 1;
};

// ---------------------------------------------------------------------------
// World
// ---------------------------------------------------------------------------

class World {
public:
    World() = default;
    World(GridMap map, std::vector<ObjectInstance> objects);

    const GridMap& map() const { return map_; }
    const std::vector<ObjectInstance>& objects() const { return objects_; }
    const ObjectInstance* object(int id) const;
    double resolution() const { return map_.resolution; }

    /// Objects whose cells include `c` (objects may overlap, e.g. a cup on a table).
    const std::vector<int>& objects_at(Cell c) const;

private:
    GridMap map_;
    std::vector<ObjectInstance> objects_;
    Grid<std::vector<int>> cell_objects_;
};

struct AgentState {
    Pose pose;
    std::string profile_id;
    double elapsed = 0.0;
    double traveled = 0.0;
};

struct MotionCommand {
    double v = 0.0;
    double omega = 0.0;
};

struct VisibleCell {
    Cell cell;
    CellLabel label = CellLabel::Free;
};

struct Detection {
    std::string category;
    double confidence = 1.0;
    std::vector<Cell> cells;  // visible footprint cells
    /// Ground-truth instance id. Hidden from the agent: only oracle reasoners
    /// and evaluation code may read it.
    int instance_id = -1;
};

struct Observation {
    std::vector<VisibleCell> visible;
    std::vector<Detection> detections;
    Pose pose;
};

struct SensorModel {
    double p_false_negative = 0.0;
    double confidence_min = 0.7;
    double confidence_max = 1.0;
};

struct EpisodeSpec {
    std::string id;
    std::string map_path;  // relative to the episode file
    Pose start;
    Goal goal;
    double timeout_s = 240.0;
    std::uint64_t seed = 0;
    std::string tier;
};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class MapError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

World load_map(const std::string& path);
World parse_map(const std::string& text);
/// Builds and validates a world from a parsed map document.
World world_from_json(const nlohmann::json& doc);
nlohmann::json world_to_json(const World& world);
/// Throws MapError naming the first offending cell.
void validate_world(const World& world);

/// Full-circle raycast. `rng` drives confidence draws and false negatives.
Observation sense(const World& world, const Pose& pose, double range_m, const SensorModel& sensor,
                  Rng& rng);

/// Cells covered by a disc-shaped robot of `radius_m` centred in `c`.
std::vector<Cell> footprint_cells(Cell c, double radius_m, double resolution);
bool footprint_clear(const World& world, Cell c, double radius_m);

/// Exact constant-(v, omega) arc.
Pose integrate_unicycle(const Pose& p, double v, double omega, double dt);

/// New cells entered along the arc, sampled every quarter cell.
std::vector<Cell> swept_cells(const Pose& pose, double v, double omega, double dt, double resolution);

AgentState step(const World& world, const AgentState& state, const MotionCommand& cmd, double dt,
                const EmbodimentProfile& profile);

/// Whether `object` satisfies every constraint of `goal` against ground truth.
bool satisfies(const World& world, const ObjectInstance& object, const Goal& goal,
               const RelationRules& rules);
/// Ground-truth relation predicate; nullopt for unsupported relation labels.
std::optional<bool> relation_holds(const std::string& relation, const ObjectInstance& subject,
                                   const ObjectInstance& other, double resolution,
                                   const RelationRules& rules);

/// Shortest 8-connected Free-space path (no corner cutting) to any pose that
/// would satisfy check_success; nullopt when infeasible.
std::optional<double> shortest_path_len(const World& world, const Pose& start, const Goal& goal,
                                        double eps_succ, const RelationRules& rules);

bool check_success(const Pose& pose, const Goal& goal, const World& world, double eps_succ,
                   const RelationRules& rules);

// JSON helpers shared by the file formats.
nlohmann::json goal_to_json(const Goal& goal);
Goal goal_from_json(const nlohmann::json& j);
nlohmann::json pose_to_json(const Pose& pose);
Pose pose_from_json(const nlohmann::json& j);
nlohmann::json episodes_to_json(const std::vector<EpisodeSpec>& episodes);
std::vector<EpisodeSpec> episodes_from_json(const nlohmann::json& doc);
std::vector<EpisodeSpec> load_episodes(const std::string& path);
std::string describe(const Goal& goal);

}  // namespace roomnav
