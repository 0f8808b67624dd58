#include "roomnav/reasoner.hpp"

#include <httplib.h>

#include <algorithm>
#include <map>

namespace roomnav {

using nlohmann::json;

std::string variant_name(const ReasonerContext& ctx) {
    static const char* names[] = {"early_stop", "room_query", "room_label", "attribute", "relation"};
    return names[ctx.index()];
}

std::string verdict_name(Verdict v) {
    switch (v) {
        case Verdict::True: return "true";
        case Verdict::False: return "false";
        case Verdict::Unknown: return "unknown";
    }
    return "unknown";
}

RoomChoice nearest_uncovered(const RoomQueryContext& ctx) {
    const RoomSummary* best = nullptr;
    for (const auto& r : ctx.uncovered) {
        if (!best) {
            best = &r;
            continue;
        }
        // Unknown distances sort after known ones.
        const double a = r.distance < 0 ? kInf : r.distance;
        const double b = best->distance < 0 ? kInf : best->distance;
        if (a < b || (a == b && r.id < best->id)) best = &r;
    }
    if (!best) return std::nullopt;
    return best->id;
}

// ---------------------------------------------------------------------------
// Oracle
// ---------------------------------------------------------------------------

OracleReasoner::OracleReasoner(const World& world, const PriorsTable& priors, OracleOptions options)
    : world_(world), priors_(priors), options_(std::move(options)) {}

bool OracleReasoner::decide_early_stop(const EarlyStopContext& ctx) {
    const auto& objs = ctx.candidate.objects;
    if (std::find(objs.begin(), objs.end(), ctx.goal.category) != objs.end()) return true;
    return priors_.prior(ctx.goal.category, ctx.candidate.category) >
           priors_.prior(ctx.goal.category, ctx.current.category) + options_.margin;
}

RoomChoice OracleReasoner::select_room(const RoomQueryContext& ctx) {
    const RoomSummary* best = nullptr;
    double best_p = -1.0;
    for (const auto& r : ctx.uncovered) {
        const double p = priors_.prior(ctx.goal.category, r.category);
        if (!best || p > best_p) {
            best = &r;
            best_p = p;
            continue;
        }
        if (p < best_p) continue;
        const double a = r.distance < 0 ? kInf : r.distance;
        const double b = best->distance < 0 ? kInf : best->distance;
        if (a < b || (a == b && r.id < best->id)) best = &r;
    }
    if (!best) return std::nullopt;
    return best->id;
}

std::string OracleReasoner::classify_room(const RoomLabelContext& ctx) {
    const GridMap& map = world_.map();
    std::map<int, int> votes;
    for (const auto& vc : ctx.observation.visible) {
        if (!map.rooms_gt.in_bounds(vc.cell)) continue;
        const int r = map.rooms_gt[vc.cell];
        if (r >= 0) ++votes[r];
    }
    if (votes.empty()) return {};
    int best = -1, best_n = -1;
    for (const auto& [r, n] : votes)
        if (n > best_n) {
            best = r;
            best_n = n;
        }
    const RoomInfo* info = map.room(best);
    if (!info) return {};
    std::string label = info->label;
    if (options_.room_confusion > 0.0) {
        const std::uint64_t h = hash_combine(hash_combine(options_.seed, hash_string("room")), static_cast<std::uint64_t>(ctx.room_id));
        if (hash_unit(h) < options_.room_confusion) {
            std::vector<std::string> others;
            for (const auto& c : priors_.room_categories())
                if (c != label) others.push_back(c);
            if (!others.empty()) label = others[splitmix64(h) % others.size()];
        }
    }
    return label;
}

const ObjectInstance* OracleReasoner::resolve(const Observation& obs, const ObjectSummary& object) const {
    // Instances of the category that the observation detected.
    std::map<int, int> seen;
    for (const auto& det : obs.detections) {
        if (det.category != object.category) continue;
        for (const Cell& c : det.cells)
            for (int idx : world_.objects_at(c))
                if (world_.objects()[static_cast<std::size_t>(idx)].category == object.category) seen[idx] = 0;
    }
    for (const Cell& c : object.cells)
        for (int idx : world_.objects_at(c))
            if (seen.count(idx)) ++seen[idx];
    int best = -1, best_n = 0;
    for (const auto& [idx, n] : seen)
        if (n > best_n) {
            best = idx;
            best_n = n;
        }
    return best < 0 ? nullptr : &world_.objects()[static_cast<std::size_t>(best)];
}

std::optional<std::string> OracleReasoner::infer_attribute(const AttributeContext& ctx) {
    const ObjectInstance* inst = resolve(ctx.observation, ctx.object);
    if (!inst) return std::nullopt;
    auto it = inst->attributes.find(ctx.name);
    if (it == inst->attributes.end()) return std::nullopt;
    if (options_.attribute_error_rate > 0.0) {
        std::uint64_t h = hash_combine(options_.seed, hash_string("attr:" + ctx.name));
        h = hash_combine(h, static_cast<std::uint64_t>(inst->id));
        if (hash_unit(h) < options_.attribute_error_rate) return it->second + "_not";
    }
    return it->second;
}

Verdict OracleReasoner::check_relation(const RelationContext& ctx) {
    if (std::find(options_.relations.begin(), options_.relations.end(), ctx.relation) == options_.relations.end())
        return Verdict::Unknown;
    const ObjectInstance* a = resolve(ctx.observation, ctx.subject);
    const ObjectInstance* b = resolve(ctx.observation, ctx.other);
    if (!a || !b || a->id == b->id) return Verdict::Unknown;
    const auto holds = relation_holds(ctx.relation, *a, *b, world_.resolution(), priors_.rules());
    if (!holds) return Verdict::Unknown;
    return *holds ? Verdict::True : Verdict::False;
}

json OracleReasoner::decide(const ReasonerContext& ctx) {
    return std::visit(
        [&](const auto& c) -> json {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, EarlyStopContext>) {
                return decide_early_stop(c) ? "switch" : "stay";
            } else if constexpr (std::is_same_v<T, RoomQueryContext>) {
                const auto r = select_room(c);
                return r ? json(*r) : json("exhausted");
            } else if constexpr (std::is_same_v<T, RoomLabelContext>) {
                const auto label = classify_room(c);
                return label.empty() ? "unlabeled" : label;
            } else if constexpr (std::is_same_v<T, AttributeContext>) {
                return infer_attribute(c).value_or("unknown");
            } else {
                return verdict_name(check_relation(c));
            }
        },
        ctx);
}

// ---------------------------------------------------------------------------
// Wire format
// ---------------------------------------------------------------------------

namespace {

json cells_to_json(const std::vector<Cell>& cells) {
    json out = json::array();
    for (const Cell& c : cells) out.push_back({c.x, c.y});
    return out;
}

std::vector<Cell> cells_from_json(const json& j) {
    std::vector<Cell> out;
    for (const auto& c : j) out.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
    return out;
}

json observation_to_json(const Observation& obs) {
    json visible = json::array();
    // Evenly thinned so the payload never exceeds a 64x64 grid.
    const std::size_t n = obs.visible.size();
    const std::size_t stride = n > kMaxWireCells ? (n + kMaxWireCells - 1) / kMaxWireCells : 1;
    for (std::size_t i = 0; i < n; i += stride) {
        const auto& vc = obs.visible[i];
        visible.push_back({vc.cell.x, vc.cell.y, vc.label == CellLabel::Occupied ? 1 : 0});
    }
    json dets = json::array();
    for (const auto& d : obs.detections)
        dets.push_back({{"category", d.category}, {"confidence", d.confidence}, {"cells", cells_to_json(d.cells)}});
    return {{"pose", pose_to_json(obs.pose)}, {"visible", visible}, {"detections", dets}};
}

Observation observation_from_json(const json& j) {
    Observation obs;
    obs.pose = pose_from_json(j.at("pose"));
    for (const auto& v : j.at("visible"))
        obs.visible.push_back({{v.at(0).get<int>(), v.at(1).get<int>()},
                               v.at(2).get<int>() ? CellLabel::Occupied : CellLabel::Free});
    for (const auto& d : j.at("detections")) {
        Detection det;
        det.category = d.at("category").get<std::string>();
        det.confidence = d.at("confidence").get<double>();
        det.cells = cells_from_json(d.at("cells"));
        obs.detections.push_back(std::move(det));
    }
    return obs;
}

json room_to_json(const RoomSummary& r) {
    return {{"id", r.id}, {"category", r.category}, {"objects", r.objects}, {"distance", r.distance}};
}

RoomSummary room_from_json(const json& j) {
    return {j.at("id").get<int>(), j.at("category").get<std::string>(),
            j.at("objects").get<std::vector<std::string>>(), j.at("distance").get<double>()};
}

json object_to_json(const ObjectSummary& o) {
    return {{"id", o.id}, {"category", o.category}, {"cells", cells_to_json(o.cells)}};
}

ObjectSummary object_from_json(const json& j) {
    return {j.at("id").get<int>(), j.at("category").get<std::string>(), cells_from_json(j.at("cells"))};
}

}  // namespace

json context_to_json(const ReasonerContext& ctx) {
    json payload = std::visit(
        [](const auto& c) -> json {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, EarlyStopContext>) {
                return {{"current", room_to_json(c.current)}, {"candidate", room_to_json(c.candidate)}};
            } else if constexpr (std::is_same_v<T, RoomQueryContext>) {
                json rooms = json::array();
                for (const auto& r : c.uncovered) rooms.push_back(room_to_json(r));
                return {{"uncovered", rooms}, {"trajectory", c.trajectory}};
            } else if constexpr (std::is_same_v<T, RoomLabelContext>) {
                return {{"room", c.room_id}, {"observation", observation_to_json(c.observation)}};
            } else if constexpr (std::is_same_v<T, AttributeContext>) {
                return {{"object", object_to_json(c.object)},
                        {"name", c.name},
                        {"observation", observation_to_json(c.observation)}};
            } else {
                return {{"subject", object_to_json(c.subject)},
                        {"other", object_to_json(c.other)},
                        {"relation", c.relation},
                        {"observation", observation_to_json(c.observation)}};
            }
        },
        ctx);
    json out{{"version", 1}, {"variant", variant_name(ctx)}, {"payload", payload}};
    if (const auto* es = std::get_if<EarlyStopContext>(&ctx)) out["goal"] = goal_to_json(es->goal);
    if (const auto* rq = std::get_if<RoomQueryContext>(&ctx)) out["goal"] = goal_to_json(rq->goal);
    return out;
}

ReasonerContext context_from_json(const json& j) {
    if (j.at("version").get<int>() != 1) throw std::invalid_argument("context: unsupported version");
    const auto variant = j.at("variant").get<std::string>();
    const json& p = j.at("payload");
    if (variant == "early_stop")
        return EarlyStopContext{room_from_json(p.at("current")), room_from_json(p.at("candidate")),
                                goal_from_json(j.at("goal"))};
    if (variant == "room_query") {
        RoomQueryContext c;
        for (const auto& r : p.at("uncovered")) c.uncovered.push_back(room_from_json(r));
        c.trajectory = p.at("trajectory").get<std::vector<int>>();
        c.goal = goal_from_json(j.at("goal"));
        return c;
    }
    if (variant == "room_label") return RoomLabelContext{p.at("room").get<int>(), observation_from_json(p.at("observation"))};
    if (variant == "attribute")
        return AttributeContext{observation_from_json(p.at("observation")), object_from_json(p.at("object")),
                                p.at("name").get<std::string>()};
    if (variant == "relation")
        return RelationContext{observation_from_json(p.at("observation")), object_from_json(p.at("subject")),
                               object_from_json(p.at("other")), p.at("relation").get<std::string>()};
    throw std::invalid_argument("context: unknown variant '" + variant + "'");
}

// ---------------------------------------------------------------------------
// Remote client
// ---------------------------------------------------------------------------

RemoteReasoner::RemoteReasoner(RemoteOptions options) : options_(std::move(options)) {}

std::optional<json> RemoteReasoner::call(const ReasonerContext& ctx) {
    json body = context_to_json(ctx);
    if (!body.contains("goal")) body["goal"] = goal_to_json(options_.goal);
    if (!options_.episode.empty()) body["episode"] = options_.episode;

    auto fail = [&](const std::string& why) -> std::optional<json> {
        ++failures_;
        errors_.push_back(variant_name(ctx) + ": " + why);
        return std::nullopt;
    };
    if (options_.endpoint.empty()) return fail("no endpoint configured");
    try {
        httplib::Client client(options_.endpoint);
        const auto sec = static_cast<time_t>(options_.timeout_s);
        const auto usec = static_cast<time_t>((options_.timeout_s - static_cast<double>(sec)) * 1e6);
        client.set_connection_timeout(sec, usec);
        client.set_read_timeout(sec, usec);
        client.set_write_timeout(sec, usec);
        auto res = client.Post("/decide", body.dump(), "application/json");
        if (!res) return fail("transport error: " + httplib::to_string(res.error()));
        if (res->status != 200) return fail("HTTP status " + std::to_string(res->status));
        json reply = json::parse(res->body);
        if (!reply.is_object() || !reply.contains("decision")) return fail("reply lacks \"decision\"");
        return reply.at("decision");
    } catch (const std::exception& e) {
        return fail(std::string("malformed reply: ") + e.what());
    }
}

bool RemoteReasoner::decide_early_stop(const EarlyStopContext& ctx) {
    const auto d = call(ctx);
    if (!d) return false;
    if (d->is_boolean()) return d->get<bool>();
    if (d->is_string() && (*d == "switch" || *d == "stay")) return *d == "switch";
    ++failures_;
    errors_.push_back("early_stop: unexpected decision " + d->dump());
    return false;
}

RoomChoice RemoteReasoner::select_room(const RoomQueryContext& ctx) {
    const auto d = call(ctx);
    if (d) {
        if (d->is_string() && *d == "exhausted" && ctx.uncovered.empty()) return std::nullopt;
        if (d->is_number_integer()) {
            const int id = d->get<int>();
            for (const auto& r : ctx.uncovered)
                if (r.id == id) return id;
        }
        ++failures_;
        errors_.push_back("room_query: unexpected decision " + d->dump());
    }
    return nearest_uncovered(ctx);
}

std::string RemoteReasoner::classify_room(const RoomLabelContext& ctx) {
    const auto d = call(ctx);
    if (!d || !d->is_string() || *d == "unlabeled") {
        if (d && !d->is_string()) {
            ++failures_;
            errors_.push_back("room_label: unexpected decision " + d->dump());
        }
        return {};
    }
    return d->get<std::string>();
}

std::optional<std::string> RemoteReasoner::infer_attribute(const AttributeContext& ctx) {
    const auto d = call(ctx);
    if (!d || !d->is_string() || *d == "unknown") {
        if (d && !d->is_string()) {
            ++failures_;
            errors_.push_back("attribute: unexpected decision " + d->dump());
        }
        return std::nullopt;
    }
    return d->get<std::string>();
}

Verdict RemoteReasoner::check_relation(const RelationContext& ctx) {
    const auto d = call(ctx);
    if (!d) return Verdict::Unknown;
    if (d->is_boolean()) return d->get<bool>() ? Verdict::True : Verdict::False;
    if (d->is_string() && *d == "true") return Verdict::True;
    if (d->is_string() && *d == "false") return Verdict::False;
    if (!(d->is_string() && *d == "unknown")) {
        ++failures_;
        errors_.push_back("relation: unexpected decision " + d->dump());
    }
    return Verdict::Unknown;
}

}  // namespace roomnav
