#include "helpers.hpp"

#include "roomnav/map_gen.hpp"
#include "roomnav/policy.hpp"

#include <doctest.h>

#include <set>

using namespace roomnav;
using namespace roomnav::test;
using nlohmann::json;

namespace {

const PriorsTable& priors() {
    static const PriorsTable p = PriorsTable::defaults();
    return p;
}

EpisodeSpec episode(const std::string& id, Pose start, Goal goal, double timeout = 120.0) {
    EpisodeSpec s;
    s.id = id;
    s.start = start;
    s.goal = std::move(goal);
    s.timeout_s = timeout;
    s.seed = 1;
    return s;
}

/// Ground-truth rooms the trace's poses pass through, consecutive repeats folded.
std::vector<int> gt_room_sequence(const World& w, const EpisodeTrace& trace) {
    std::vector<int> seq;
    for (const auto& e : trace.events()) {
        if (e.at("type") != "tick") continue;
        const Pose p = pose_from_json(e.at("pose"));
        const int r = w.map().rooms_gt[cell_at(p.position(), w.resolution())];
        if (r >= 0 && (seq.empty() || seq.back() != r)) seq.push_back(r);
    }
    return seq;
}

void check_trace_queries(const EpisodeTrace& trace) {
    std::set<std::pair<int, int>> early_stop_pairs;
    for (const auto& e : trace.events()) {
        if (e.at("type") != "query") continue;
        const ReasonerContext ctx = context_from_json(e.at("context"));
        CHECK(variant_name(ctx) == e.at("variant"));
        if (const auto* es = std::get_if<EarlyStopContext>(&ctx))
            CHECK(early_stop_pairs.insert({es->current.id, es->candidate.id}).second);
    }
}

NavConfig traced() {
    NavConfig cfg;
    cfg.trace_every = 1;
    return cfg;
}

}  // namespace

TEST_CASE("a target in plain view is reached quickly") {
    const World w = make_world(box_rows(60, 40), {{"chair", {34, 18, 37, 21}}});
    const EpisodeSpec spec = episode("view", {1.55, 1.95, 0.0}, {"chair", {}});
    OracleReasoner oracle(w, priors());
    EpisodeTrace trace;
    const EpisodeResult r = run_episode(w, spec, wheeled_profile(), oracle, traced(), &trace);
    CHECK(r.success);
    CHECK(r.declared);
    CHECK(r.time_s < 20.0);
    CHECK(r.error.empty());
    REQUIRE(r.shortest_m >= 0.0);
    CHECK(r.traveled_m >= r.shortest_m - std::sqrt(2.0) * w.resolution());
    CHECK(trace.events().front().at("type") == "header");
    CHECK(trace.events().back().at("type") == "end");
    check_trace_queries(trace);
}

TEST_CASE("an absent target ends in failure, never a false claim") {
    const World w = make_world(box_rows(40, 30), {{"sofa", {10, 10, 19, 14}}});
    const EpisodeSpec spec = episode("absent", {0.55, 0.55, 0.0}, {"refrigerator", {}}, 90.0);
    OracleReasoner oracle(w, priors());
    const EpisodeResult r = run_episode(w, spec, wheeled_profile(), oracle, {});
    CHECK_FALSE(r.success);
    CHECK_FALSE(r.declared);
    CHECK(r.shortest_m < 0.0);
    CHECK(r.time_s <= spec.timeout_s + 1e-9);
}

TEST_CASE("three rooms: the agent crosses bedroom, living room, kitchen in order") {
    const World w = load_map(fixture_path("threeroom.json"));
    const EpisodeSpec spec = episode("three", {1.05, 2.55, 0.0}, {"refrigerator", {}});
    OracleReasoner oracle(w, priors());
    EpisodeTrace trace;
    const EpisodeResult r = run_episode(w, spec, wheeled_profile(), oracle, traced(), &trace);
    CHECK(r.success);
    CHECK(gt_room_sequence(w, trace) == std::vector<int>{0, 1, 2});
    CHECK(r.queries > 0);
    check_trace_queries(trace);
}

TEST_CASE("constrained goals resolve to the right instance") {
    const World w = load_map(fixture_path("threeroom.json"));
    OracleReasoner oracle(w, priors());
    // The only red chair sits in the living room.
    const Goal red{"chair", {AttrEq{"color", "red"}}};
    const EpisodeResult a = run_episode(w, episode("red", {1.05, 2.55, 0.0}, red), wheeled_profile(), oracle, {});
    CHECK(a.success);

    // No sofa is blue: the agent must not claim one.
    const Goal blue{"sofa", {AttrEq{"color", "blue"}}};
    const EpisodeResult b = run_episode(w, episode("blue", {1.05, 2.55, 0.0}, blue, 150.0), wheeled_profile(), oracle, {});
    CHECK_FALSE(b.declared);
    CHECK_FALSE(b.success);
}

TEST_CASE("generated episodes: no false positives, consistent bookkeeping") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        CAPTURE(seed);
        const Tier tier = static_cast<Tier>(seed % 5);
        const GeneratedEpisode ep = generate_episode(seed, tier, priors());
        OracleReasoner oracle(ep.world, priors());
        EpisodeTrace trace;
        const EpisodeResult r = run_episode(ep.world, ep.spec, wheeled_profile(), oracle, {}, &trace);
        CHECK(r.error.empty());
        if (r.declared) CHECK(r.success);
        CHECK(r.success == r.declared);
        CHECK(r.time_s <= ep.spec.timeout_s + 1e-9);
        if (r.success) CHECK(r.traveled_m >= r.shortest_m - std::sqrt(2.0) * ep.world.resolution());
        check_trace_queries(trace);
    }
}

TEST_CASE("episodes are deterministic") {
    const GeneratedEpisode ep = generate_episode(7, Tier::Hard, priors());
    OracleReasoner o1(ep.world, priors()), o2(ep.world, priors());
    EpisodeTrace t1, t2;
    const EpisodeResult a = run_episode(ep.world, ep.spec, wheeled_profile(), o1, {}, &t1);
    const EpisodeResult b = run_episode(ep.world, ep.spec, wheeled_profile(), o2, {}, &t2);
    CHECK(a == b);
    CHECK(t1.to_jsonl() == t2.to_jsonl());
}

TEST_CASE("exhausted search can be made to fail fast") {
    const World w = make_world(box_rows(30, 20));
    NavConfig cfg;
    cfg.fail_on_exhausted = true;
    OracleReasoner oracle(w, priors());
    const EpisodeResult r =
        run_episode(w, episode("empty", {0.55, 0.55, 0.0}, {"bed", {}}, 200.0), wheeled_profile(), oracle, cfg);
    CHECK_FALSE(r.success);
    CHECK(r.time_s < 200.0);
}

TEST_CASE("the flat baseline stops at the first instance of the category") {
    const World w = load_map(fixture_path("threeroom.json"));
    const EpisodeResult r =
        run_flat_episode(w, episode("flat", {1.05, 2.55, 0.0}, {"refrigerator", {}}), wheeled_profile(), {});
    CHECK(r.success);
    CHECK(r.queries == 0);

    // Constraints are ignored, so it settles for the grey sofa.
    const Goal blue{"sofa", {AttrEq{"color", "blue"}}};
    const EpisodeResult b = run_flat_episode(w, episode("flat-blue", {1.05, 2.55, 0.0}, blue), wheeled_profile(), {});
    CHECK(b.declared);
    CHECK_FALSE(b.success);
}

TEST_CASE("episodes with awkward stand points still finish") {
    // Each once stalled: an unreachable stand point, a grazing straight drive, an off-cell arrival.
    const std::vector<std::pair<std::uint64_t, Tier>> cases{
        {3017, Tier::Attribute}, {3127, Tier::Relation}, {5014, Tier::Relation}};
    for (const auto& [seed, tier] : cases) {
        CAPTURE(seed);
        const GeneratedEpisode ep = generate_episode(seed, tier, priors());
        OracleReasoner oracle(ep.world, priors());
        const EpisodeResult r = run_episode(ep.world, ep.spec, wheeled_profile(), oracle, {});
        CHECK(r.success);
        CHECK(r.time_s < ep.spec.timeout_s / 2.0);
    }
}
