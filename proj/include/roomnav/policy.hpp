#pragma once

#include "roomnav/autonomy.hpp"
#include "roomnav/gridworld.hpp"
#include "roomnav/in_room_explorer.hpp"
#include "roomnav/reasoner.hpp"
#include "roomnav/scene_rep.hpp"

#include <json.hpp>

#include <map>
#include <set>
#include <string>
#include <vector>

namespace roomnav {

/// Everything that shapes one episode run besides the world and the reasoner.
struct NavConfig {
    double dt = 0.1;              // s
    double eps_succ = 1.0;        // m
    double sense_every = 0.2;     // m of travel between observations
    int segment_every = 10;       // ticks between periodic re-segmentations
    int trace_every = 10;         // ticks between trace pose samples
    bool fail_on_exhausted = false;
    SceneParams scene;
    PlannerParams planner;
    ControllerParams control;
    SensorModel sensor;
    RelationRules relations;

    static NavConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

enum class Phase { ExploringRoom, Transit, Verifying, Approaching, Done, Exhausted };
std::string phase_name(Phase p);

enum class RoomStatus { Unvisited, Partial, Covered };
std::string room_status_name(RoomStatus s);

struct NavState {
    Phase phase = Phase::ExploringRoom;
    int room = -1;    // ExploringRoom / Transit target
    int object = -1;  // Verifying / Approaching
    bool success = false;  // Done
    std::map<int, RoomStatus> room_status;
    std::set<std::pair<int, int>> early_stop_history;
};

/// Append-only JSON-lines event log.
class EpisodeTrace {
public:
    static constexpr int kVersion = 1;

    void add(nlohmann::json event);
    const std::vector<nlohmann::json>& events() const { return events_; }
    std::string to_jsonl() const;
    void write(const std::string& path) const;

private:
    std::vector<nlohmann::json> events_;
};

struct EpisodeResult {
    std::string id;
    bool success = false;
    bool declared = false;      // the agent stopped claiming success
    double time_s = 0.0;
    double traveled_m = 0.0;
    double shortest_m = -1.0;   // < 0 when infeasible
    std::vector<int> room_visits;
    int queries = 0;
    int reasoner_failures = 0;
    std::string tier;
    double timeout_s = 0.0;
    std::string error;          // non-empty if the run aborted

    friend bool operator==(const EpisodeResult&, const EpisodeResult&) = default;
};

/// Runs the full hierarchical agent until it declares, gives up, or times out.
EpisodeResult run_episode(const World& world, const EpisodeSpec& spec, const EmbodimentProfile& profile,
                          Reasoner& reasoner, const NavConfig& config, EpisodeTrace* trace = nullptr);

/// Room-agnostic comparator: repeatedly drives to the nearest frontier of the
/// whole belief and stops at the first detected object of the goal category.
EpisodeResult run_flat_episode(const World& world, const EpisodeSpec& spec, const EmbodimentProfile& profile,
                               const NavConfig& config, EpisodeTrace* trace = nullptr);

/// Cells flagged as places to stand to look at `cells`: passable, within
/// `max_dist_m` of a cell and with known-Free line of sight to it.
Mask viewing_cells(const SceneRep& rep, const Mask& passable, const std::vector<Cell>& cells, double max_dist_m);

/// Passable cells near known-Free cells bordering Unknown, excluding `ignored`.
Mask frontier_goals(const SceneRep& rep, const Mask& passable, double reach_m, const Mask* ignored = nullptr);

}  // namespace roomnav
