#include "roomnav/priors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace roomnav {

using nlohmann::json;

PriorsTable::PriorsTable(std::vector<std::string> room_categories,
                         std::map<std::string, std::map<std::string, double>> weights, RelationRules rules)
    : rooms_(std::move(room_categories)), weights_(std::move(weights)), rules_(rules) {
    validate();
}

PriorsTable PriorsTable::defaults() {
    std::vector<std::string> rooms{"kitchen",     "bedroom", "bathroom", "living_room",
                                   "dining_room", "office",  "corridor", "laundry_room"};
    std::map<std::string, std::map<std::string, double>> w{
        {"refrigerator", {{"kitchen", 0.9}, {"dining_room", 0.1}}},
        {"microwave", {{"kitchen", 0.85}, {"dining_room", 0.1}, {"office", 0.05}}},
        {"oven", {{"kitchen", 1.0}}},
        {"sink", {{"kitchen", 0.5}, {"bathroom", 0.4}, {"laundry_room", 0.1}}},
        {"toilet", {{"bathroom", 1.0}}},
        {"bathtub", {{"bathroom", 1.0}}},
        {"bed", {{"bedroom", 1.0}}},
        {"nightstand", {{"bedroom", 0.9}, {"living_room", 0.1}}},
        {"wardrobe", {{"bedroom", 0.8}, {"corridor", 0.2}}},
        {"sofa", {{"living_room", 0.85}, {"bedroom", 0.1}, {"office", 0.05}}},
        {"tv", {{"living_room", 0.7}, {"bedroom", 0.2}, {"office", 0.1}}},
        {"armchair", {{"living_room", 0.6}, {"bedroom", 0.2}, {"office", 0.2}}},
        {"dining_table", {{"dining_room", 0.8}, {"kitchen", 0.2}}},
        {"chair", {{"dining_room", 0.35}, {"kitchen", 0.2}, {"office", 0.25}, {"living_room", 0.1}, {"bedroom", 0.1}}},
        {"desk", {{"office", 0.7}, {"bedroom", 0.3}}},
        {"computer", {{"office", 0.75}, {"bedroom", 0.2}, {"living_room", 0.05}}},
        {"bookshelf", {{"office", 0.45}, {"living_room", 0.35}, {"bedroom", 0.1}, {"corridor", 0.1}}},
        {"washing_machine", {{"laundry_room", 0.8}, {"bathroom", 0.2}}},
        {"plant", {{"living_room", 0.3}, {"corridor", 0.3}, {"office", 0.2}, {"dining_room", 0.1}, {"bedroom", 0.1}}},
        {"cup", {{"kitchen", 0.4}, {"dining_room", 0.3}, {"living_room", 0.15}, {"office", 0.15}}},
        {"table", {{"living_room", 0.3}, {"kitchen", 0.2}, {"dining_room", 0.2}, {"office", 0.2}, {"corridor", 0.1}}},
        {"shoe_rack", {{"corridor", 0.8}, {"bedroom", 0.2}}},
    };
    return PriorsTable(std::move(rooms), std::move(w));
}

PriorsTable PriorsTable::from_json(const json& doc) {
    if (doc.value("format", 0) != 1) throw std::invalid_argument("priors: unsupported or missing \"format\"");
    RelationRules rules;
    if (doc.contains("relations")) {
        const auto& r = doc.at("relations");
        if (r.contains("near")) rules.near_max_m = r.at("near").value("max_m", rules.near_max_m);
        if (r.contains("on")) rules.on_dilation_cells = r.at("on").value("dilation_cells", rules.on_dilation_cells);
    }
    return PriorsTable(doc.at("rooms").get<std::vector<std::string>>(),
                       doc.at("objects").get<std::map<std::string, std::map<std::string, double>>>(), rules);
}

PriorsTable PriorsTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open priors file '" + path + "'");
    return from_json(json::parse(in));
}

json PriorsTable::to_json() const {
    return {{"format", 1},
            {"rooms", rooms_},
            {"objects", weights_},
            {"relations",
             {{"near", {{"max_m", rules_.near_max_m}}}, {"on", {{"dilation_cells", rules_.on_dilation_cells}}}}}};
}

std::vector<std::string> PriorsTable::object_categories() const {
    std::vector<std::string> out;
    for (const auto& [k, _] : weights_) out.push_back(k);
    return out;
}

double PriorsTable::prior(const std::string& object, const std::string& room) const {
    auto row = weights_.find(object);
    if (row == weights_.end()) return 0.0;
    auto it = row->second.find(room);
    if (it != row->second.end()) return it->second;
    if (std::find(rooms_.begin(), rooms_.end(), room) != rooms_.end()) return 0.0;
    double sum = 0.0;
    for (const auto& [_, w] : row->second) sum += w;
    return rooms_.empty() ? 0.0 : sum / static_cast<double>(rooms_.size());
}

std::string PriorsTable::best_room(const std::string& object) const {
    auto row = weights_.find(object);
    if (row == weights_.end()) return {};
    std::string best;
    double best_w = -1.0;
    for (const auto& room : rooms_) {
        auto it = row->second.find(room);
        const double w = it == row->second.end() ? 0.0 : it->second;
        if (w > best_w) {
            best_w = w;
            best = room;
        }
    }
    return best;
}

double PriorsTable::max_weight(const std::string& object) const {
    auto row = weights_.find(object);
    if (row == weights_.end()) return 0.0;
    double best = 0.0;
    for (const auto& [_, w] : row->second) best = std::max(best, w);
    return best;
}

void PriorsTable::validate() const {
    for (const auto& [object, row] : weights_) {
        bool any = false;
        for (const auto& [room, w] : row) {
            if (std::find(rooms_.begin(), rooms_.end(), room) == rooms_.end())
                throw std::invalid_argument("priors: row '" + object + "' references unknown room '" + room + "'");
            if (!(w >= 0.0 && w <= 1.0))
                throw std::invalid_argument("priors: weight for ('" + object + "', '" + room + "') outside [0, 1]");
            any = any || w > 0.0;
        }
        if (!any) throw std::invalid_argument("priors: row '" + object + "' has no positive weight");
    }
}

void PriorsTable::require_normalized() const {
    for (const auto& [object, row] : weights_) {
        double sum = 0.0;
        for (const auto& [_, w] : row) sum += w;
        if (std::abs(sum - 1.0) > 1e-6)
            throw std::invalid_argument("priors: row '" + object + "' sums to " + std::to_string(sum) + ", expected 1");
    }
}

}  // namespace roomnav
