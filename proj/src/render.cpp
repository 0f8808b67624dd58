#include "roomnav/render.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace roomnav {

using nlohmann::json;

namespace {

const std::set<std::string> kEventTypes = {"header", "rooms", "phase", "tick", "covered", "snapshot", "end", "query"};

bool is_number(const json& j, const char* key) { return j.contains(key) && j.at(key).is_number(); }

void require_pose(const json& j, const char* key, int line) {
    if (!j.contains(key) || !j.at(key).is_object() || !is_number(j.at(key), "x") || !is_number(j.at(key), "y"))
        throw TraceError(line, std::string("missing or malformed \"") + key + "\"");
}

void require_room(const json& ev, const std::set<int>& known, int line) {
    if (!ev.contains("room")) return;
    if (!ev.at("room").is_number_integer()) throw TraceError(line, "\"room\" must be an integer");
    const int id = ev.at("room").get<int>();
    if (id >= 0 && !known.count(id)) throw TraceError(line, "unknown room id " + std::to_string(id));
}

}  // namespace

std::vector<json> parse_trace(const std::string& text) {
    std::vector<json> events;
    std::set<int> rooms;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
        json ev;
        try {
            ev = json::parse(raw);
        } catch (const json::parse_error& e) {
            throw TraceError(line, std::string("invalid JSON: ") + e.what());
        }
        if (!ev.is_object() || !ev.contains("type") || !ev.at("type").is_string())
            throw TraceError(line, "event without a \"type\"");
        const std::string type = ev.at("type").get<std::string>();
        if (!kEventTypes.count(type)) throw TraceError(line, "unknown event type \"" + type + "\"");
        if (events.empty() && type != "header") throw TraceError(line, "trace must start with a header");
        if (type == "header") {
            if (!events.empty()) throw TraceError(line, "duplicate header");
            if (ev.value("version", 0) != 1) throw TraceError(line, "unsupported trace version");
            if (!ev.contains("width") || !ev.contains("height"))
                throw TraceError(line, "header without map dimensions");
            require_pose(ev, "start", line);
        } else if (type == "rooms") {
            if (!ev.contains("rooms") || !ev.at("rooms").is_array()) throw TraceError(line, "\"rooms\" must be a list");
            for (const auto& r : ev.at("rooms")) {
                if (!r.is_object() || !r.contains("id") || !r.at("id").is_number_integer())
                    throw TraceError(line, "room entry without an integer id");
                rooms.insert(r.at("id").get<int>());
            }
        } else if (type == "tick") {
            if (!is_number(ev, "t")) throw TraceError(line, "tick without \"t\"");
            require_pose(ev, "pose", line);
            require_room(ev, rooms, line);
        } else if (type == "phase" || type == "covered") {
            require_room(ev, rooms, line);
        } else if (type == "snapshot") {
            if (!ev.contains("graph") || !ev.at("graph").is_object()) throw TraceError(line, "snapshot without graph");
            const json& g = ev.at("graph");
            for (const char* key : {"rooms", "viewpoints", "objects"})
                if (!g.contains(key) || !g.at(key).is_array())
                    throw TraceError(line, std::string("snapshot graph without \"") + key + "\"");
            for (const auto& r : g.at("rooms")) {
                if (!r.contains("id") || !r.at("id").is_number_integer())
                    throw TraceError(line, "snapshot room without an integer id");
                rooms.insert(r.at("id").get<int>());
            }
            for (const auto& v : g.at("viewpoints")) {
                require_pose(v, "pose", line);
                require_room(v, rooms, line);
            }
            for (const auto& o : g.at("objects")) {
                if (!o.contains("bbox") || !o.at("bbox").is_array() || o.at("bbox").size() != 4)
                    throw TraceError(line, "snapshot object without a bbox");
                require_room(o, rooms, line);
            }
        }
        events.push_back(std::move(ev));
    }
    return events;
}

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

namespace {

const char* const kPalette[] = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2",
                                "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

class Svg {
public:
    Svg(int w, int h) : h_(h) {
        out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w * 4 << "\" height=\"" << h * 4
             << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
        out_ << "<rect x=\"0\" y=\"0\" width=\"" << w << "\" height=\"" << h << "\" fill=\"#ffffff\"/>\n";
    }

    // Grid coordinates have y up; SVG has y down.
    double y(double gy) const { return h_ - gy; }

    void cells(int x0, int x1, int gy, const std::string& fill, double opacity) {
        out_ << "<rect x=\"" << x0 << "\" y=\"" << h_ - gy - 1 << "\" width=\"" << x1 - x0 + 1
             << "\" height=\"1\" fill=\"" << fill << "\"";
        if (opacity < 1.0) out_ << " fill-opacity=\"" << num(opacity) << "\"";
        out_ << "/>\n";
    }
    void line(double ax, double ay, double bx, double by, const std::string& stroke, double width,
              bool dashed = false) {
        out_ << "<line x1=\"" << num(ax) << "\" y1=\"" << num(y(ay)) << "\" x2=\"" << num(bx) << "\" y2=\""
             << num(y(by)) << "\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width) << "\"";
        if (dashed) out_ << " stroke-dasharray=\"2 1\"";
        out_ << "/>\n";
    }
    void circle(double cx, double cy, double r, const std::string& fill, const std::string& stroke = "none") {
        out_ << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(y(cy)) << "\" r=\"" << num(r) << "\" fill=\"" << fill
             << "\" stroke=\"" << stroke << "\" stroke-width=\"0.4\"/>\n";
    }
    void box(double x0, double y0, double x1, double y1, const std::string& stroke) {
        out_ << "<rect x=\"" << num(x0) << "\" y=\"" << num(y(y1)) << "\" width=\"" << num(x1 - x0) << "\" height=\""
             << num(y1 - y0) << "\" fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"0.4\"/>\n";
    }
    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke) {
        if (pts.size() < 2) return;
        out_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"0.6\" points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i)
            out_ << (i ? " " : "") << num(pts[i].first) << "," << num(y(pts[i].second));
        out_ << "\"/>\n";
    }
    void text(double x, double gy, const std::string& s) {
        std::string esc;
        for (char c : s) {
            if (c == '<') esc += "&lt;";
            else if (c == '>') esc += "&gt;";
            else if (c == '&') esc += "&amp;";
            else esc += c;
        }
        out_ << "<text x=\"" << num(x) << "\" y=\"" << num(y(gy)) << "\" font-size=\"3\" font-family=\"monospace\">"
             << esc << "</text>\n";
    }
    void group(const std::string& id) { out_ << "<g id=\"" << id << "\">\n"; }
    void end_group() { out_ << "</g>\n"; }

    std::string finish() {
        out_ << "</svg>\n";
        return out_.str();
    }

private:
    int h_;
    std::ostringstream out_;
};

}  // namespace

std::string render_svg(const World& world, const std::vector<json>& events, const RelationRules& rules) {
    const GridMap& map = world.map();
    const double res = world.resolution();
    Svg svg(map.width(), map.height());

    if (!events.empty()) {
        const json& h = events.front();
        if (h.at("width").get<int>() != map.width() || h.at("height").get<int>() != map.height())
            throw TraceError(1, "trace map size does not match the map file");
    }

    svg.group("grid");
    for (int y = 0; y < map.height(); ++y)
        for (int x = 0; x < map.width(); ++x) {
            if (map.free({x, y})) continue;
            int x1 = x;
            while (x1 + 1 < map.width() && !map.free({x1 + 1, y})) ++x1;
            svg.cells(x, x1, y, "#333333", 1.0);
            x = x1;
        }
    svg.end_group();
    if (events.empty()) return svg.finish();

    const json* snapshot = nullptr;
    for (const auto& ev : events)
        if (ev.at("type") == "snapshot") snapshot = &ev.at("graph");

    std::map<int, std::pair<double, double>> room_centre;
    if (snapshot) {
        svg.group("rooms");
        for (const auto& r : snapshot->at("rooms")) {
            const int id = r.at("id").get<int>();
            const std::string colour = kPalette[static_cast<std::size_t>(id) % std::size(kPalette)];
            double sx = 0, sy = 0, n = 0;
            for (const auto& run : r.value("cells", json::array())) {
                const int x0 = run.at(0).get<int>(), y0 = run.at(1).get<int>(), x1 = run.at(2).get<int>();
                svg.cells(x0, x1, y0, colour, 0.25);
                const double len = x1 - x0 + 1;
                sx += (x0 + x1 + 1) * 0.5 * len;
                sy += (y0 + 0.5) * len;
                n += len;
            }
            if (n > 0) room_centre[id] = {sx / n, sy / n};
        }
        for (const auto& [id, c] : room_centre) {
            std::string label = "r" + std::to_string(id);
            for (const auto& r : snapshot->at("rooms"))
                if (r.at("id").get<int>() == id && r.value("category", "") != "")
                    label += " " + r.at("category").get<std::string>();
            svg.text(c.first, c.second, label);
        }
        svg.end_group();
    }

    // Trajectory.
    std::vector<std::pair<double, double>> traj;
    for (const auto& ev : events)
        if (ev.at("type") == "tick") {
            const json& p = ev.at("pose");
            traj.push_back({p.at("x").get<double>() / res, p.at("y").get<double>() / res});
        }
    svg.group("trajectory");
    svg.polyline(traj, "#d62728");
    svg.end_group();

    if (snapshot) {
        std::map<int, std::pair<double, double>> view_at, object_at;
        for (const auto& v : snapshot->at("viewpoints"))
            view_at[v.at("id").get<int>()] = {v.at("pose").at("x").get<double>() / res,
                                              v.at("pose").at("y").get<double>() / res};
        for (const auto& o : snapshot->at("objects")) {
            const auto& b = o.at("bbox");
            object_at[o.at("id").get<int>()] = {(b.at(0).get<double>() + b.at(2).get<double>() + 1) * 0.5,
                                                (b.at(1).get<double>() + b.at(3).get<double>() + 1) * 0.5};
        }
        svg.group("edges");
        const json edges = snapshot->value("edges", json::object());
        for (const auto& e : edges.value("room_room", json::array())) {
            const auto a = room_centre.find(e.at(0).get<int>()), b = room_centre.find(e.at(1).get<int>());
            if (a != room_centre.end() && b != room_centre.end())
                svg.line(a->second.first, a->second.second, b->second.first, b->second.second, "#555555", 0.5, true);
        }
        for (const auto& e : edges.value("view_object", json::array())) {
            const auto a = view_at.find(e.at(0).get<int>()), b = object_at.find(e.at(1).get<int>());
            if (a != view_at.end() && b != object_at.end())
                svg.line(a->second.first, a->second.second, b->second.first, b->second.second, "#1f77b4", 0.15);
        }
        for (const auto& e : edges.value("object_object", json::array())) {
            const auto a = object_at.find(e.at(0).get<int>()), b = object_at.find(e.at(1).get<int>());
            if (a != object_at.end() && b != object_at.end())
                svg.line(a->second.first, a->second.second, b->second.first, b->second.second, "#9467bd", 0.3);
        }
        svg.end_group();

        svg.group("viewpoints");
        for (const auto& [id, p] : view_at) svg.circle(p.first, p.second, 0.8, "#1f77b4");
        svg.end_group();

        svg.group("objects");
        for (const auto& o : snapshot->at("objects")) {
            const auto& b = o.at("bbox");
            svg.box(b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>() + 1,
                    b.at(3).get<double>() + 1, "#ff7f0e");
        }
        svg.end_group();
    }

    // Goal instances from ground truth, start and final pose.
    const json& header = events.front();
    svg.group("goal");
    if (header.contains("goal")) {
        const Goal goal = goal_from_json(header.at("goal"));
        for (const auto& obj : world.objects()) {
            if (!satisfies(world, obj, goal, rules)) continue;
            const Vec2 c = obj.centroid(res);
            svg.circle(c.x() / res, c.y() / res, 2.0, "none", "#d62728");
            svg.circle(c.x() / res, c.y() / res, 0.6, "#d62728");
        }
    }
    const json& start = header.at("start");
    svg.circle(start.at("x").get<double>() / res, start.at("y").get<double>() / res, 1.2, "#2ca02c");
    if (!traj.empty()) svg.circle(traj.back().first, traj.back().second, 1.0, "#000000");
    svg.end_group();
    return svg.finish();
}

void render_file(const std::string& trace_path, const std::string& map_path, const std::string& out_path) {
    std::ifstream in(trace_path);
    if (!in) throw std::runtime_error("cannot read trace " + trace_path);
    std::stringstream ss;
    ss << in.rdbuf();
    const auto events = parse_trace(ss.str());
    const World world = load_map(map_path);
    const std::string svg = render_svg(world, events);
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << svg;
}

}  // namespace roomnav
