#pragma once

#include "roomnav/gridworld.hpp"
#include "roomnav/priors.hpp"

#include <json.hpp>

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace roomnav {

/// An object the generator must place before random furniture.
struct PlantSpec {
    std::string category;
    std::map<std::string, std::string> attributes;
    /// Room label to place it in. Empty picks the room with the highest prior.
    std::string room_label;
    /// Optional anchor: "on" places this object on the edge of a fresh `anchor_category`
    /// instance, "near" places it next to one.
    std::string anchor_relation;
    std::string anchor_category;
    /// Place it in a room other than the highest-prior one (distractors).
    bool avoid_best_room = false;
};

struct GenParams {
    int rooms_x = 1;
    int rooms_y = 1;
    double room_size_min = 4.0;  // m, interior side
    double room_size_max = 6.0;
    double door_width = 1.0;
    double object_density = 0.12;  // objects per square meter of room interior
    double resolution = 0.1;
    int wall_cells = 2;
    double clearance = 0.8;   // object to wall / object to object, m
    double door_clear = 1.0;  // object to door, m
    /// Room labels in layout order. Empty draws distinct labels from the priors.
    std::vector<std::string> room_labels;
    std::vector<PlantSpec> plants;
    /// Categories never sampled as random furniture.
    std::set<std::string> exclude_categories;

    static GenParams from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

class GenError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GeneratedMap {
    World world;
    /// Object ids of the planted objects, in `plants` order (anchors excluded).
    std::vector<int> planted;
};

/// Deterministic for a fixed seed. Throws GenError on infeasible parameters or
/// when planted objects cannot be placed.
GeneratedMap generate_map(std::uint64_t seed, const GenParams& params, const PriorsTable& priors);

/// Footprint size in meters (long side, short side) used for a category.
std::pair<double, double> object_size(const std::string& category);

// ---------------------------------------------------------------------------
// Episode presets
// ---------------------------------------------------------------------------

enum class Tier { Easy, Medium, Hard, Attribute, Relation };

std::string tier_name(Tier t);
Tier tier_from_name(const std::string& name);
double tier_timeout(Tier t);

struct GeneratedEpisode {
    World world;
    EpisodeSpec spec;
    int target_id = -1;
};

struct EpisodeGenOptions {
    double start_clearance = 0.4;  // m, start pose must clear every preset profile
    double eps_succ = 1.0;
    double sensor_range = 6.0;
    int max_attempts = 64;
};

/// Builds one episode of the given tier. Guarantees the target is reachable for
/// a robot of radius `start_clearance` and, for Hard, that the start room differs
/// from the target room.
GeneratedEpisode generate_episode(std::uint64_t seed, Tier tier, const PriorsTable& priors,
                                  const EpisodeGenOptions& options = {});

}  // namespace roomnav
