#include "roomnav/policy.hpp"

#include "roomnav/grid_search.hpp"
#include "roomnav/visibility.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace roomnav {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config and names
// ---------------------------------------------------------------------------

NavConfig NavConfig::from_json(const json& j) {
    NavConfig c;
    c.dt = j.value("dt", c.dt);
    c.eps_succ = j.value("eps_succ", c.eps_succ);
    c.sense_every = j.value("sense_every", c.sense_every);
    c.segment_every = j.value("segment_every", c.segment_every);
    c.trace_every = j.value("trace_every", c.trace_every);
    c.fail_on_exhausted = j.value("fail_on_exhausted", c.fail_on_exhausted);
    if (j.contains("scene")) {
        const json& s = j.at("scene");
        c.scene.d_cover = s.value("d_cover", c.scene.d_cover);
        c.scene.viewpoint_eps = s.value("viewpoint_eps", c.scene.viewpoint_eps);
        c.scene.dilation_radius = s.value("dilation_radius", c.scene.dilation_radius);
        c.scene.door_width_max = s.value("door_width_max", c.scene.door_width_max);
        c.scene.merge_distance = s.value("merge_distance", c.scene.merge_distance);
        c.scene.min_room_area = s.value("min_room_area", c.scene.min_room_area);
    }
    if (j.contains("planner")) {
        const json& p = j.at("planner");
        c.planner.d_cover = p.value("d_cover", c.planner.d_cover);
        c.planner.delta = p.value("delta", c.planner.delta);
        c.planner.restarts = p.value("restarts", c.planner.restarts);
        c.planner.window = p.value("window", c.planner.window);
        c.planner.spacing = p.value("spacing", c.planner.spacing);
        c.planner.jitter = p.value("jitter", c.planner.jitter);
        c.planner.reach_radius = p.value("reach_radius", c.planner.reach_radius);
    }
    if (j.contains("control")) {
        const json& p = j.at("control");
        c.control.lookahead = p.value("lookahead", c.control.lookahead);
        c.control.rotate_threshold = p.value("rotate_threshold", c.control.rotate_threshold);
        c.control.heading_gain = p.value("heading_gain", c.control.heading_gain);
        c.control.arrive_tolerance = p.value("arrive_tolerance", c.control.arrive_tolerance);
        c.control.stuck_ticks = p.value("stuck_ticks", c.control.stuck_ticks);
    }
    if (j.contains("sensor")) {
        const json& p = j.at("sensor");
        c.sensor.p_false_negative = p.value("p_false_negative", c.sensor.p_false_negative);
        c.sensor.confidence_min = p.value("confidence_min", c.sensor.confidence_min);
        c.sensor.confidence_max = p.value("confidence_max", c.sensor.confidence_max);
    }
    if (j.contains("relations")) {
        const json& p = j.at("relations");
        c.relations.near_max_m = p.value("near_max_m", c.relations.near_max_m);
        c.relations.on_dilation_cells = p.value("on_dilation_cells", c.relations.on_dilation_cells);
    }
    c.control.dt = c.dt;
    if (!(c.dt > 0.0) || !(c.eps_succ > 0.0) || !(c.sense_every > 0.0) || c.planner.delta < 1 || c.planner.restarts < 1 ||
        !(c.planner.window > 0.0) || !(c.planner.d_cover > 0.0))
        throw std::invalid_argument("config: parameters must be positive and delta >= 1");
    return c;
}

json NavConfig::to_json() const {
    return {{"dt", dt},
            {"eps_succ", eps_succ},
            {"sense_every", sense_every},
            {"segment_every", segment_every},
            {"trace_every", trace_every},
            {"fail_on_exhausted", fail_on_exhausted},
            {"scene",
             {{"d_cover", scene.d_cover},
              {"viewpoint_eps", scene.viewpoint_eps},
              {"dilation_radius", scene.dilation_radius},
              {"door_width_max", scene.door_width_max},
              {"merge_distance", scene.merge_distance},
              {"min_room_area", scene.min_room_area}}},
            {"planner",
             {{"d_cover", planner.d_cover},
              {"delta", planner.delta},
              {"restarts", planner.restarts},
              {"window", planner.window},
              {"spacing", planner.spacing},
              {"jitter", planner.jitter},
              {"reach_radius", planner.reach_radius}}},
            {"control",
             {{"lookahead", control.lookahead},
              {"rotate_threshold", control.rotate_threshold},
              {"heading_gain", control.heading_gain},
              {"arrive_tolerance", control.arrive_tolerance},
              {"stuck_ticks", control.stuck_ticks}}},
            {"sensor",
             {{"p_false_negative", sensor.p_false_negative},
              {"confidence_min", sensor.confidence_min},
              {"confidence_max", sensor.confidence_max}}},
            {"relations", {{"near_max_m", relations.near_max_m}, {"on_dilation_cells", relations.on_dilation_cells}}}};
}

std::string phase_name(Phase p) {
    switch (p) {
        case Phase::ExploringRoom: return "ExploringRoom";
        case Phase::Transit: return "Transit";
        case Phase::Verifying: return "Verifying";
        case Phase::Approaching: return "Approaching";
        case Phase::Done: return "Done";
        case Phase::Exhausted: return "Exhausted";
    }
    return "?";
}

std::string room_status_name(RoomStatus s) {
    switch (s) {
        case RoomStatus::Unvisited: return "Unvisited";
        case RoomStatus::Partial: return "Partial";
        case RoomStatus::Covered: return "Covered";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Trace
// ---------------------------------------------------------------------------

void EpisodeTrace::add(json event) { events_.push_back(std::move(event)); }

std::string EpisodeTrace::to_jsonl() const {
    std::string out;
    for (const json& e : events_) {
        out += e.dump();
        out += '\n';
    }
    return out;
}

void EpisodeTrace::write(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write trace " + path);
    f << to_jsonl();
}

// ---------------------------------------------------------------------------
// Goal-set helpers
// ---------------------------------------------------------------------------

Mask viewing_cells(const SceneRep& rep, const Mask& passable, const std::vector<Cell>& cells, double max_dist_m) {
    Mask out(rep.width(), rep.height(), 0);
    if (cells.empty()) return out;
    const double r = max_dist_m / rep.resolution();
    Cell lo = cells.front(), hi = cells.front();
    for (const Cell& c : cells) {
        lo = {std::min(lo.x, c.x), std::min(lo.y, c.y)};
        hi = {std::max(hi.x, c.x), std::max(hi.y, c.y)};
    }
    const int m = static_cast<int>(std::ceil(r)) + 1;
    auto blocks = [&](Cell c) { return !rep.known_free(c); };
    for (int y = std::max(0, lo.y - m); y <= std::min(rep.height() - 1, hi.y + m); ++y)
        for (int x = std::max(0, lo.x - m); x <= std::min(rep.width() - 1, hi.x + m); ++x) {
            const Cell c{x, y};
            if (!passable[c]) continue;
            const Vec2 from = grid_center(c);
            for (const Cell& t : cells) {
                if ((grid_center(t) - from).norm() > r + 1e-9) continue;
                if (line_of_sight(from, t, blocks)) {
                    out[c] = 1;
                    break;
                }
            }
        }
    return out;
}

Mask frontier_goals(const SceneRep& rep, const Mask& passable, double reach_m, const Mask* ignored) {
    const Grid<Belief>& b = rep.belief();
    Mask out(rep.width(), rep.height(), 0);
    const auto disc = disc_offsets(reach_m / rep.resolution());
    for (int i = 0; i < b.size(); ++i) {
        if (b[i] != Belief::Free || (ignored && (*ignored)[i])) continue;
        const Cell c = b.cell(i);
        bool frontier = false;
        for (Cell n : {Cell{c.x + 1, c.y}, Cell{c.x - 1, c.y}, Cell{c.x, c.y + 1}, Cell{c.x, c.y - 1}})
            if (b.in_bounds(n) && b[n] == Belief::Unknown) frontier = true;
        if (!frontier) continue;
        for (const Cell& o : disc) {
            const Cell n{c.x + o.x, c.y + o.y};
            if (passable.in_bounds(n) && passable[n]) out[n] = 1;
        }
    }
    return out;
}

namespace {

bool any(const Mask& m) { return std::any_of(m.data().begin(), m.data().end(), [](std::uint8_t v) { return v != 0; }); }

// ---------------------------------------------------------------------------
// Reasoner wrapper counting and logging every call
// ---------------------------------------------------------------------------

class TracingReasoner final : public Reasoner {
public:
    TracingReasoner(Reasoner& inner, EpisodeTrace* trace, const double* clock)
        : inner_(inner), trace_(trace), clock_(clock) {}

    bool decide_early_stop(const EarlyStopContext& ctx) override {
        const bool r = inner_.decide_early_stop(ctx);
        log(ctx, r ? "switch" : "stay");
        return r;
    }
    RoomChoice select_room(const RoomQueryContext& ctx) override {
        const RoomChoice r = inner_.select_room(ctx);
        log(ctx, r ? json(*r) : json("exhausted"));
        return r;
    }
    std::string classify_room(const RoomLabelContext& ctx) override {
        std::string r = inner_.classify_room(ctx);
        log(ctx, r.empty() ? "unlabeled" : r);
        return r;
    }
    std::optional<std::string> infer_attribute(const AttributeContext& ctx) override {
        auto r = inner_.infer_attribute(ctx);
        log(ctx, r ? *r : "unknown");
        return r;
    }
    Verdict check_relation(const RelationContext& ctx) override {
        const Verdict r = inner_.check_relation(ctx);
        log(ctx, r == Verdict::True ? "true" : r == Verdict::False ? "false" : "unknown");
        return r;
    }
    int failures() const override { return inner_.failures(); }
    int queries() const { return queries_; }

private:
    template <typename Ctx>
    void log(const Ctx& ctx, json reply) {
        ++queries_;
        if (!trace_) return;
        const ReasonerContext any_ctx{ctx};
        trace_->add({{"type", "query"},
                     {"t", *clock_},
                     {"variant", variant_name(any_ctx)},
                     {"context", context_to_json(any_ctx)},
                     {"reply", std::move(reply)}});
    }

    Reasoner& inner_;
    EpisodeTrace* trace_;
    const double* clock_;
    int queries_ = 0;
};

/// Answers nothing; the flat baseline never consults it.
class NullReasoner final : public Reasoner {
public:
    bool decide_early_stop(const EarlyStopContext&) override { return false; }
    RoomChoice select_room(const RoomQueryContext& ctx) override { return nearest_uncovered(ctx); }
    std::string classify_room(const RoomLabelContext&) override { return {}; }
    std::optional<std::string> infer_attribute(const AttributeContext&) override { return std::nullopt; }
    Verdict check_relation(const RelationContext&) override { return Verdict::Unknown; }
};

// ---------------------------------------------------------------------------
// The agent
// ---------------------------------------------------------------------------

class Navigator {
public:
    Navigator(const World& world, const EpisodeSpec& spec, const EmbodimentProfile& profile, Reasoner& reasoner,
              const NavConfig& cfg, EpisodeTrace* trace, bool flat)
        : world_(world),
          spec_(spec),
          profile_(profile),
          cfg_(cfg),
          trace_(trace),
          flat_(flat),
          reasoner_(reasoner, trace, &state_.elapsed),
          rep_(world.map().width(), world.map().height(), world.resolution(), cfg.scene),
          exec_(profile, cfg.control, world.map().width(), world.map().height(), world.resolution()),
          rng_(make_rng(spec.seed, 0x73656e73u)),
          frontier_ignored_(world.map().width(), world.map().height(), 0) {
        state_.pose = spec.start;
        state_.profile_id = profile.id;
        nav_.phase = Phase::ExploringRoom;
    }

    EpisodeResult run();

private:
    // perception
    void perceive();
    void segment_if_due(bool force);
    void sync_rooms();
    int current_room() const;

    // decision
    MotionCommand decide();
    MotionCommand dispatch();
    MotionCommand explore();
    MotionCommand transit();
    MotionCommand verify();
    MotionCommand approach();
    MotionCommand exhausted();
    MotionCommand sweep_frontier();

    void set_phase(Phase p, int room, int object, const std::string& why);
    void resume(const std::string& why);
    void reselect(const std::string& why);
    void check_early_stop();
    bool check_candidates();
    void enter_room(int room);
    std::map<int, double> room_distances() const;

    enum class Check { Accepted, Rejected, Deferred, NeedView };
    Check evaluate(int id);
    std::pair<std::size_t, std::uint64_t> signature() const {
        return {rep_.objects().size(), rep_.room_revision()};
    }

    void trace_tick();
    int verify_depth_ = 0;

    const World& world_;
    const EpisodeSpec& spec_;
    EmbodimentProfile profile_;
    NavConfig cfg_;
    EpisodeTrace* trace_;
    bool flat_;
    AgentState state_;
    TracingReasoner reasoner_;
    SceneRep rep_;
    Executor exec_;
    Rng rng_;
    NavState nav_;

    std::map<int, RoomExplorer> explorers_;
    Observation last_obs_;
    std::vector<int> last_nodes_;
    Vec2 last_sense_ = Vec2::Zero();
    bool sensed_ = false;
    bool force_sense_ = false;
    long ticks_ = 0;
    long last_segment_tick_ = 0;
    std::uint64_t segmented_revision_ = ~0ULL;
    std::uint64_t explored_room_revision_ = 0;
    std::uint64_t traced_room_revision_ = ~0ULL;

    std::set<int> pending_new_;
    std::set<int> unreachable_;
    std::set<int> rejected_;
    std::map<int, std::pair<std::size_t, std::uint64_t>> deferred_;
    std::vector<int> room_visits_;
    bool exhaust_retry_ = false;

    // Verification detour
    Phase saved_phase_ = Phase::ExploringRoom;
    int saved_room_ = -1;
    bool view_pending_ = false;
    bool view_arrived_ = false;
    Mask view_goal_;
    std::pair<int, int> view_pair_{-1, -1};
    std::set<std::pair<int, int>> coview_failed_;

    // Approach
    Mask approach_goal_;
    Mask approach_bad_;
    std::uint64_t approach_revision_ = ~0ULL;
    bool approach_fallback_ = false;
    int approach_failures_ = 0;
    long approach_key_ = 0;

    Mask frontier_ignored_;
    long frontier_key_ = 0;
    bool frontier_looked_ = false;
    std::uint64_t frontier_revision_ = ~0ULL;
    Mask frontier_goal_;
    long key_base_ = 0;
};

// ----- perception ----------------------------------------------------------

void Navigator::perceive() {
    const Vec2 p = state_.pose.position();
    if (sensed_ && !force_sense_ && (p - last_sense_).norm() < cfg_.sense_every) return;
    const bool first = !sensed_;
    sensed_ = true;
    force_sense_ = false;
    last_sense_ = p;
    last_obs_ = sense(world_, state_.pose, profile_.sensor_range, cfg_.sensor, rng_);
    last_nodes_ = rep_.integrate_observation(last_obs_);
    const auto vp = rep_.maybe_add_viewpoint(state_.pose, last_obs_);
    exec_.update_map(rep_.belief());
    if (!flat_) segment_if_due(first || vp.has_value());
}

void Navigator::segment_if_due(bool force) {
    const bool periodic = ticks_ - last_segment_tick_ >= cfg_.segment_every;
    if (!(force || periodic) || rep_.belief_revision() == segmented_revision_) return;
    last_segment_tick_ = ticks_;
    segmented_revision_ = rep_.belief_revision();
    rep_.segment_rooms();
    sync_rooms();
}

void Navigator::sync_rooms() {
    const auto& rooms = rep_.rooms();
    for (auto it = nav_.room_status.begin(); it != nav_.room_status.end();)
        if (!rooms.count(it->first)) {
            explorers_.erase(it->first);
            pending_new_.erase(it->first);
            unreachable_.erase(it->first);
            it = nav_.room_status.erase(it);
        } else {
            ++it;
        }
    for (const auto& [id, _] : rooms)
        if (!nav_.room_status.count(id)) {
            nav_.room_status[id] = RoomStatus::Unvisited;
            pending_new_.insert(id);
        }
    if (rep_.room_revision() != explored_room_revision_) {
        explored_room_revision_ = rep_.room_revision();
        for (auto& [_, e] : explorers_) e.invalidate();
    }
    if (trace_ && rep_.room_revision() != traced_room_revision_) {
        traced_room_revision_ = rep_.room_revision();
        json rs = json::array();
        for (const auto& [id, r] : rooms)
            rs.push_back({{"id", id},
                          {"category", r.category},
                          {"cells", r.mask.size()},
                          {"status", room_status_name(nav_.room_status[id])}});
        trace_->add({{"type", "rooms"}, {"t", state_.elapsed}, {"rooms", rs}});
    }
}

int Navigator::current_room() const { return rep_.room_at(cell_at(state_.pose.position(), rep_.resolution())); }

std::map<int, double> Navigator::room_distances() const {
    std::map<int, double> out;
    const Grid<double> field = distance_field(exec_.passable(), {cell_at(state_.pose.position(), rep_.resolution())});
    for (const auto& [id, room] : rep_.rooms()) {
        double best = kInf;
        for (int i : room.mask)
            if (exec_.passable()[i]) best = std::min(best, field[i]);
        out[id] = best < kInf ? best * rep_.resolution() : -1.0;
    }
    return out;
}

// ----- transitions ---------------------------------------------------------

void Navigator::set_phase(Phase p, int room, int object, const std::string& why) {
    const bool changed = p != nav_.phase || room != nav_.room || object != nav_.object;
    if (trace_ && changed)
        trace_->add({{"type", "phase"},
                     {"t", state_.elapsed},
                     {"from", phase_name(nav_.phase)},
                     {"to", phase_name(p)},
                     {"room", room},
                     {"object", object},
                     {"why", why}});
    nav_.phase = p;
    nav_.room = room;
    nav_.object = object;
    if (changed) exec_.reset();
}

void Navigator::enter_room(int room) {
    auto& s = nav_.room_status[room];
    if (s == RoomStatus::Unvisited) s = RoomStatus::Partial;
    if (room_visits_.empty() || room_visits_.back() != room) room_visits_.push_back(room);
    if (!explorers_.count(room)) {
        PlannerParams pp = cfg_.planner;
        pp.seed = hash_combine(spec_.seed, static_cast<std::uint64_t>(room) + 0x726f6f6dULL);
        explorers_.emplace(room, RoomExplorer(room, pp));
    }
    set_phase(Phase::ExploringRoom, room, -1, "enter");
}

void Navigator::reselect(const std::string& why) {
    for (int attempt = 0; attempt < 16; ++attempt) {
        std::vector<int> uncovered;
        for (const auto& [id, s] : nav_.room_status)
            if (s != RoomStatus::Covered && !unreachable_.count(id)) uncovered.push_back(id);
        if (uncovered.empty()) break;
        const auto dist = room_distances();
        std::vector<int> visits = room_visits_;
        const RoomQueryContext ctx = rep_.build_room_query(uncovered, dist, visits, spec_.goal);
        RoomChoice choice = reasoner_.select_room(ctx);
        if (!choice) break;
        if (std::find(uncovered.begin(), uncovered.end(), *choice) == uncovered.end()) choice = nearest_uncovered(ctx);
        if (!choice) break;
        if (dist.at(*choice) < 0.0) {
            unreachable_.insert(*choice);
            continue;
        }
        if (*choice == current_room())
            enter_room(*choice);
        else
            set_phase(Phase::Transit, *choice, -1, why);
        return;
    }
    set_phase(Phase::Exhausted, -1, -1, why);
}

void Navigator::resume(const std::string& why) {
    view_pending_ = false;
    view_arrived_ = false;
    if (saved_phase_ == Phase::ExploringRoom && rep_.room(saved_room_) &&
        nav_.room_status[saved_room_] != RoomStatus::Covered) {
        set_phase(Phase::ExploringRoom, saved_room_, -1, why);
    } else if (saved_phase_ == Phase::Transit && rep_.room(saved_room_) && !unreachable_.count(saved_room_)) {
        set_phase(Phase::Transit, saved_room_, -1, why);
    } else if (saved_phase_ == Phase::Exhausted || flat_) {
        set_phase(saved_phase_, saved_room_, -1, why);
    } else {
        reselect(why);
    }
}

void Navigator::check_early_stop() {
    if (nav_.phase != Phase::ExploringRoom) return;
    const int cur = nav_.room;
    for (auto it = pending_new_.begin(); it != pending_new_.end();) {
        const int cand = *it;
        const RoomNode* r = rep_.room(cand);
        if (!r || nav_.room_status[cand] != RoomStatus::Unvisited) {
            it = pending_new_.erase(it);
            continue;
        }
        if (cand == cur || r->category.empty() || nav_.early_stop_history.count({cur, cand})) {
            ++it;
            continue;
        }
        nav_.early_stop_history.insert({cur, cand});
        it = pending_new_.erase(it);
        if (reasoner_.decide_early_stop(rep_.build_early_stop(cur, cand, spec_.goal))) {
            nav_.room_status[cur] = RoomStatus::Partial;
            set_phase(Phase::Transit, cand, -1, "early_stop");
            return;
        }
    }
}

bool Navigator::check_candidates() {
    if (nav_.phase == Phase::Verifying || nav_.phase == Phase::Approaching || nav_.phase == Phase::Done) return false;
    const Vec2 p = state_.pose.position();
    int best = -1;
    double best_d = kInf;
    for (const auto& [id, o] : rep_.objects()) {
        if (o.category != spec_.goal.category || rejected_.count(id)) continue;
        if (auto it = deferred_.find(id); it != deferred_.end() && it->second == signature()) continue;
        const double d = (o.centroid(rep_.resolution()) - p).norm();
        if (d < best_d) {
            best_d = d;
            best = id;
        }
    }
    if (best < 0) return false;
    saved_phase_ = nav_.phase;
    saved_room_ = nav_.room;
    view_pending_ = false;
    view_arrived_ = false;
    set_phase(Phase::Verifying, nav_.room, best, "candidate");
    nav_.room = saved_room_;
    return true;
}

// ----- verification ---------------------------------------------------------

Navigator::Check Navigator::evaluate(int id) {
    if (!rep_.object(id)) return Check::Deferred;
    auto seen_now = [&](int o) { return std::find(last_nodes_.begin(), last_nodes_.end(), o) != last_nodes_.end(); };
    if (rep_.object(id)->best_view < 0 && seen_now(id)) rep_.force_viewpoint(state_.pose, last_obs_);
    if (rep_.object(id)->best_view < 0) return Check::Deferred;
    if (flat_) return Check::Accepted;

    bool deferred = false;
    for (const Constraint& c : spec_.goal.constraints) {
        if (const auto* a = std::get_if<AttrEq>(&c)) {
            rep_.infer_attribute_on_demand(spec_.goal.category, *a, reasoner_);
            const ObjectNode* node = rep_.object(id);
            const auto it = node->attributes.find(a->name);
            if (it == node->attributes.end() || !it->second) {
                deferred = true;
            } else if (*it->second != a->value) {
                return Check::Rejected;
            }
        } else if (const auto* r = std::get_if<InRoom>(&c)) {
            const ObjectNode* node = rep_.object(id);
            const RoomNode* room = rep_.room(node->room);
            if (!room || room->category != r->room_category) deferred = true;
        } else if (const auto* rel = std::get_if<RelationTo>(&c)) {
            bool confirmed = false, open = false;
            std::vector<int> others;
            for (const auto& [oid, o] : rep_.objects())
                if (oid != id && o.category == rel->other_category) others.push_back(oid);
            for (int other : others) {
                RelationResult res = rep_.infer_relation_on_demand(id, other, rel->relation, reasoner_);
                if (res == RelationResult::Undetermined && rep_.co_observing(id, other).empty()) {
                    if (seen_now(id) && seen_now(other)) {
                        rep_.force_viewpoint(state_.pose, last_obs_);
                        res = rep_.infer_relation_on_demand(id, other, rel->relation, reasoner_);
                    } else if (!coview_failed_.count({id, other})) {
                        // Route to a place that sees both objects at once.
                        const ObjectNode* a = rep_.object(id);
                        const ObjectNode* b = rep_.object(other);
                        const double range = profile_.sensor_range - 0.5;
                        Mask both = viewing_cells(rep_, exec_.passable(), a->cells, range);
                        const Mask vb = viewing_cells(rep_, exec_.passable(), b->cells, range);
                        for (int i = 0; i < both.size(); ++i) both[i] = both[i] && vb[i];
                        if (any(both)) {
                            view_goal_ = std::move(both);
                            view_pair_ = {id, other};
                            return Check::NeedView;
                        }
                        coview_failed_.insert({id, other});
                    }
                }
                if (res == RelationResult::Confirmed) {
                    confirmed = true;
                    break;
                }
                if (res == RelationResult::Undetermined) open = true;
            }
            if (!confirmed) {
                (void)open;
                deferred = true;
            }
        }
    }
    return deferred ? Check::Deferred : Check::Accepted;
}

MotionCommand Navigator::verify() {
    const int id = nav_.object;
    if (view_pending_) {
        if (view_arrived_) {
            view_arrived_ = false;
            view_pending_ = false;
            rep_.force_viewpoint(state_.pose, last_obs_);
            if (rep_.co_observing(view_pair_.first, view_pair_.second).empty()) coview_failed_.insert(view_pair_);
        } else {
            const auto step = exec_.drive(state_, view_goal_, key_base_ + 7);
            if (step.status == Executor::Status::Moving) return step.cmd;
            if (step.status == Executor::Status::Arrived) {
                view_arrived_ = true;
                force_sense_ = true;
                return {};
            }
            coview_failed_.insert(view_pair_);
            view_pending_ = false;
        }
    }
    switch (evaluate(id)) {
        case Check::Accepted:
            approach_revision_ = ~0ULL;
            approach_failures_ = 0;
            approach_bad_ = Mask(rep_.width(), rep_.height(), 0);
            set_phase(Phase::Approaching, nav_.room, id, "verified");
            return approach();
        case Check::Rejected:
            rejected_.insert(id);
            resume("rejected");
            return dispatch();
        case Check::Deferred:
            deferred_[id] = signature();
            resume("deferred");
            return dispatch();
        case Check::NeedView:
            view_pending_ = true;
            view_arrived_ = false;
            ++key_base_;
            return {};
    }
    return {};
}

MotionCommand Navigator::approach() {
    const ObjectNode* node = rep_.object(nav_.object);
    if (!node) {
        resume("object_lost");
        return dispatch();
    }
    const double res = rep_.resolution();
    if (approach_revision_ != rep_.belief_revision()) {
        approach_revision_ = rep_.belief_revision();
        const Grid<double> field = distance_field(exec_.passable(), {cell_at(state_.pose.position(), res)});
        Mask goal = viewing_cells(rep_, exec_.passable(), node->cells, cfg_.eps_succ / 2.0);
        for (int i = 0; i < goal.size(); ++i)
            if (approach_bad_[i] || field[i] >= kInf) goal[i] = 0;
        approach_fallback_ = !any(goal);
        if (approach_fallback_) {
            // No admissible stand point known yet: close in on the object to learn more.
            int best = -1;
            double best_d = kInf;
            for (int i = 0; i < field.size(); ++i) {
                if (field[i] >= kInf || !exec_.passable()[i] || approach_bad_[i]) continue;
                double d = kInf;
                for (const Cell& c : node->cells) d = std::min(d, (grid_center(c) - grid_center(field.cell(i))).norm());
                if (d < best_d) {
                    best_d = d;
                    best = i;
                }
            }
            goal = Mask(rep_.width(), rep_.height(), 0);
            if (best >= 0) goal[best] = 1;
        }
        const bool keep = !exec_.path().cells.empty() && approach_goal_.size() == goal.size() &&
                          goal[exec_.path().cells.back()] && approach_goal_[exec_.path().cells.back()];
        approach_goal_ = std::move(goal);
        if (!keep) ++approach_key_;
    }
    const auto step = exec_.drive(state_, approach_goal_, (approach_key_ << 8) + 3);
    switch (step.status) {
        case Executor::Status::Moving: return step.cmd;
        case Executor::Status::Arrived: {
            const Cell here = cell_at(state_.pose.position(), res);
            if (!approach_fallback_) {
                const Vec2 from = state_.pose.position() / res;
                auto blocks = [&](Cell c) { return !rep_.known_free(c); };
                bool ok = false;
                for (const Cell& c : node->cells)
                    if ((cell_center(c, res) - state_.pose.position()).norm() <= cfg_.eps_succ - 1e-6 &&
                        line_of_sight(from, c, blocks)) {
                        ok = true;
                        break;
                    }
                if (ok) {
                    nav_.success = true;
                    set_phase(Phase::Done, nav_.room, nav_.object, "declare");
                    return {};
                }
            }
            approach_bad_[here] = 1;
            if (!exec_.path().cells.empty()) approach_bad_[exec_.path().cells.back()] = 1;
            approach_revision_ = ~0ULL;
            if (++approach_failures_ > (approach_fallback_ ? 3 : 8)) {
                deferred_[nav_.object] = signature();
                resume("approach_failed");
                return dispatch();
            }
            return {};
        }
        default:
            approach_revision_ = ~0ULL;
            if (++approach_failures_ > 3) {
                deferred_[nav_.object] = signature();
                resume("approach_failed");
                return dispatch();
            }
            return {};
    }
}

// ----- exploration ----------------------------------------------------------

MotionCommand Navigator::explore() {
    if (flat_) return sweep_frontier();
    int room = nav_.room;
    if (room < 0 || !rep_.room(room)) {
        const int here = current_room();
        if (here >= 0 && nav_.room_status[here] != RoomStatus::Covered) {
            enter_room(here);
            room = here;
        } else {
            reselect("room_lost");
            return nav_.phase == Phase::ExploringRoom ? MotionCommand{} : dispatch();
        }
    }
    check_early_stop();
    if (nav_.phase != Phase::ExploringRoom) return dispatch();
    if (!explorers_.count(room)) enter_room(room);
    RoomExplorer& ex = explorers_.at(room);
    for (int attempt = 0; attempt < 4; ++attempt) {
        const auto out = ex.tick(rep_, exec_.passable(), state_.pose);
        if (out.covered || !out.waypoint) {
            nav_.room_status[room] = RoomStatus::Covered;
            if (trace_) trace_->add({{"type", "covered"}, {"t", state_.elapsed}, {"room", room}, {"plans", ex.plans()}});
            reselect("covered");
            return dispatch();
        }
        const auto step = exec_.drive(state_, *out.waypoint);
        if (step.status == Executor::Status::Moving) return step.cmd;
        if (step.status == Executor::Status::Arrived) return {};
        ex.drop_current();
    }
    return {};
}

MotionCommand Navigator::transit() {
    const int target = nav_.room;
    const RoomNode* room = rep_.room(target);
    if (!room) {
        reselect("room_lost");
        return dispatch();
    }
    if (current_room() == target) {
        enter_room(target);
        return dispatch();
    }
    Mask goal(rep_.width(), rep_.height(), 0);
    for (int i : room->mask)
        if (exec_.passable()[i]) goal[i] = 1;
    const auto step = exec_.drive(state_, goal, (static_cast<long>(target) << 8) + 1 + (key_base_ << 20));
    if (step.status == Executor::Status::Moving) return step.cmd;
    if (step.status == Executor::Status::Arrived) {
        enter_room(target);
        return dispatch();
    }
    unreachable_.insert(target);
    ++key_base_;
    reselect("unreachable");
    return nav_.phase == Phase::Transit && nav_.room == target ? MotionCommand{} : dispatch();
}

MotionCommand Navigator::sweep_frontier() {
    const double reach = profile_.radius + 0.25;
    if (frontier_revision_ != rep_.belief_revision()) {
        frontier_revision_ = rep_.belief_revision();
        frontier_goal_ = frontier_goals(rep_, exec_.passable(), reach, &frontier_ignored_);
        const auto& path = exec_.path().cells;
        if (path.empty() || !frontier_goal_[path.back()]) ++frontier_key_;
    }
    if (!any(frontier_goal_)) return {};
    const auto step = exec_.drive(state_, frontier_goal_, (frontier_key_ << 8) + 5);
    if (step.status == Executor::Status::Moving) {
        frontier_looked_ = false;
        return step.cmd;
    }
    if (step.status == Executor::Status::Arrived && !frontier_looked_) {
        // Look from here before deciding the frontier cannot be resolved.
        frontier_looked_ = true;
        force_sense_ = true;
        return {};
    }
    frontier_looked_ = false;
    // Give up on frontier cells that stay unresolved once we stand next to them.
    Cell at = cell_at(state_.pose.position(), rep_.resolution());
    if (step.status == Executor::Status::Unreachable) {
        for (int i = 0; i < frontier_goal_.size(); ++i) frontier_goal_[i] = 0;
        frontier_ignored_ = Mask(rep_.width(), rep_.height(), 1);
        return {};
    }
    if (step.status == Executor::Status::Stuck && !exec_.path().cells.empty()) at = exec_.path().cells.back();
    for (const Cell& o : disc_offsets((reach + 0.3) / rep_.resolution())) {
        const Cell c{at.x + o.x, at.y + o.y};
        if (frontier_ignored_.in_bounds(c)) frontier_ignored_[c] = 1;
    }
    frontier_revision_ = ~0ULL;
    ++frontier_key_;
    return {};
}

MotionCommand Navigator::exhausted() {
    if (!unreachable_.empty() && !exhaust_retry_) {
        exhaust_retry_ = true;
        unreachable_.clear();
        reselect("retry_unreachable");
        if (nav_.phase != Phase::Exhausted) return dispatch();
    }
    bool fresh = false;
    for (const auto& [id, s] : nav_.room_status)
        if (s != RoomStatus::Covered && !unreachable_.count(id)) fresh = true;
    if (fresh) {
        exhaust_retry_ = false;
        reselect("new_room");
        if (nav_.phase != Phase::Exhausted) return dispatch();
    }
    if (cfg_.fail_on_exhausted) {
        set_phase(Phase::Done, -1, -1, "exhausted");
        return {};
    }
    return sweep_frontier();
}

MotionCommand Navigator::dispatch() {
    if (++verify_depth_ > 8) return {};
    switch (nav_.phase) {
        case Phase::ExploringRoom: return explore();
        case Phase::Transit: return transit();
        case Phase::Verifying: return verify();
        case Phase::Approaching: return approach();
        case Phase::Exhausted: return exhausted();
        case Phase::Done: return {};
    }
    return {};
}

MotionCommand Navigator::decide() {
    perceive();
    if (!flat_) {
        segment_if_due(false);
        rep_.update_room_labels(reasoner_);
        if (nav_.phase == Phase::ExploringRoom && nav_.room < 0 && rep_.rooms().empty())
            set_phase(Phase::Exhausted, -1, -1, "no_rooms");
    }
    if (nav_.phase == Phase::Done) return {};
    check_candidates();
    verify_depth_ = 0;
    return dispatch();
}

void Navigator::trace_tick() {
    if (!trace_) return;
    trace_->add({{"type", "tick"},
                 {"t", state_.elapsed},
                 {"pose", pose_to_json(state_.pose)},
                 {"phase", phase_name(nav_.phase)},
                 {"room", current_room()}});
}

EpisodeResult Navigator::run() {
    EpisodeResult res;
    res.id = spec_.id;
    res.tier = spec_.tier;
    res.timeout_s = spec_.timeout_s;
    const auto shortest = shortest_path_len(world_, spec_.start, spec_.goal, cfg_.eps_succ, cfg_.relations);
    res.shortest_m = shortest ? *shortest : -1.0;
    if (trace_)
        trace_->add({{"type", "header"},
                     {"version", EpisodeTrace::kVersion},
                     {"episode", spec_.id},
                     {"map", spec_.map_path},
                     {"tier", spec_.tier},
                     {"agent", flat_ ? "flat" : "hierarchical"},
                     {"profile", profile_.id},
                     {"goal", goal_to_json(spec_.goal)},
                     {"start", pose_to_json(spec_.start)},
                     {"timeout", spec_.timeout_s},
                     {"width", world_.map().width()},
                     {"height", world_.map().height()},
                     {"resolution", world_.resolution()}});
    if (flat_) set_phase(Phase::ExploringRoom, -1, -1, "start");

    while (state_.elapsed < spec_.timeout_s - 1e-9) {
        const MotionCommand cmd = decide();
        if (ticks_ % std::max(1, cfg_.trace_every) == 0) trace_tick();
        if (nav_.phase == Phase::Done) break;
        state_ = step(world_, state_, cmd, cfg_.dt, profile_);
        ++ticks_;
    }
    trace_tick();
    res.declared = nav_.phase == Phase::Done && nav_.success;
    res.success = res.declared && check_success(state_.pose, spec_.goal, world_, cfg_.eps_succ, cfg_.relations);
    res.time_s = state_.elapsed;
    res.traveled_m = state_.traveled;
    res.room_visits = room_visits_;
    res.queries = reasoner_.queries();
    res.reasoner_failures = reasoner_.failures();
    if (trace_) {
        trace_->add({{"type", "snapshot"}, {"t", state_.elapsed}, {"graph", rep_.snapshot()}});
        trace_->add({{"type", "end"},
                     {"t", state_.elapsed},
                     {"success", res.success},
                     {"declared", res.declared},
                     {"traveled", res.traveled_m},
                     {"shortest", res.shortest_m},
                     {"queries", res.queries},
                     {"room_visits", res.room_visits}});
    }
    return res;
}

}  // namespace

EpisodeResult run_episode(const World& world, const EpisodeSpec& spec, const EmbodimentProfile& profile,
                          Reasoner& reasoner, const NavConfig& config, EpisodeTrace* trace) {
    Navigator nav(world, spec, profile, reasoner, config, trace, false);
    return nav.run();
}

EpisodeResult run_flat_episode(const World& world, const EpisodeSpec& spec, const EmbodimentProfile& profile,
                               const NavConfig& config, EpisodeTrace* trace) {
    NullReasoner none;
    Navigator nav(world, spec, profile, none, config, trace, true);
    return nav.run();
}

}  // namespace roomnav
