#pragma once

#include "roomnav/gridworld.hpp"

#include <json.hpp>

#include <stdexcept>
#include <string>
#include <vector>

namespace roomnav {

/// Malformed trace; `line` is 1-based.
class TraceError : public std::runtime_error {
public:
    TraceError(int line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

/// Parses and validates a JSON-lines trace. Blank lines are skipped.
std::vector<nlohmann::json> parse_trace(const std::string& text);

/// SVG showing the map, agent rooms, trajectory, viewpoints, objects, graph
/// edges and goal instances. `events` must come from parse_trace.
std::string render_svg(const World& world, const std::vector<nlohmann::json>& events,
                       const RelationRules& rules = {});

/// Reads both files and writes the SVG.
void render_file(const std::string& trace_path, const std::string& map_path, const std::string& out_path);

}  // namespace roomnav
