#pragma once

#include "roomnav/gridworld.hpp"

#include <json.hpp>

#include <map>
#include <string>
#include <vector>

namespace roomnav {

/// Object-category to room-category likelihoods plus the relation predicate
/// parameters. This is the explicit commonsense the oracle reasoner uses.
class PriorsTable {
public:
    PriorsTable() = default;
    PriorsTable(std::vector<std::string> room_categories,
                std::map<std::string, std::map<std::string, double>> weights, RelationRules rules = {});

    /// Built-in table of 22 object categories over 8 room types.
    static PriorsTable defaults();
    static PriorsTable from_json(const nlohmann::json& doc);
    static PriorsTable load(const std::string& path);
    nlohmann::json to_json() const;

    const std::vector<std::string>& room_categories() const { return rooms_; }
    std::vector<std::string> object_categories() const;
    bool has_object(const std::string& category) const { return weights_.count(category) != 0; }

    /// Weight of `object` given `room`. Unlabeled or unknown rooms get the row mean,
    /// unknown objects get 0.
    double prior(const std::string& object, const std::string& room) const;
    /// Room category with the largest weight for `object` (empty if unknown).
    std::string best_room(const std::string& object) const;
    double max_weight(const std::string& object) const;

    /// Throws std::invalid_argument when a row has no positive weight or a weight is outside [0, 1].
    void validate() const;
    /// Throws std::invalid_argument unless every row sums to 1 (within 1e-6).
    void require_normalized() const;

    const RelationRules& rules() const { return rules_; }
    RelationRules& rules() { return rules_; }

private:
    std::vector<std::string> rooms_;
    std::map<std::string, std::map<std::string, double>> weights_;
    RelationRules rules_;
};

}  // namespace roomnav
