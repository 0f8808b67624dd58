#include "helpers.hpp"

#include "roomnav/map_gen.hpp"

#include <doctest.h>

#include <set>

using namespace roomnav;
using namespace roomnav::test;

namespace {

Observation look(const World& w, const Pose& p, double range = 6.0) {
    Rng rng = make_rng(3, 0);
    return sense(w, p, range, {}, rng);
}

int known_cells(const SceneRep& rep) {
    int n = 0;
    for (int i = 0; i < rep.belief().size(); ++i) n += rep.belief()[i] != Belief::Unknown ? 1 : 0;
    return n;
}

/// Brute-force C_t: oracle-visible cells strictly within d_cover of the pose.
std::set<int> oracle_coverage(const World& w, const Pose& p, double range, double d_cover) {
    const Mask vis = brute_force_visible(w, p, range);
    std::set<int> out;
    for (int i = 0; i < vis.size(); ++i)
        if (vis[i] && (cell_center(vis.cell(i), w.resolution()) - p.position()).norm() < d_cover) out.insert(i);
    return out;
}

}  // namespace

TEST_CASE("integrate_observation: belief growth and object merging") {
    const World w = make_world(box_rows(80, 30), {{"chair", {20, 10, 23, 13}}, {"chair", {70, 10, 73, 13}}});
    SceneRep rep(w.map().width(), w.map().height(), w.resolution());
    const Observation first = look(w, {1.0, 1.5, 0.0});
    rep.integrate_observation(first);
    CHECK(known_cells(rep) == static_cast<int>(first.visible.size()));

    SUBCASE("same chair from two poses merges") {
        const Observation second = look(w, {3.5, 2.5, 0.0});
        rep.integrate_observation(second);
        int chairs_near = 0;
        for (const auto& [id, o] : rep.objects())
            if (o.category == "chair" && o.lo.x < 40) {
                ++chairs_near;
                std::set<std::pair<int, int>> seen;
                for (const auto& obs : {first, second})
                    for (const auto& d : obs.detections)
                        if (d.instance_id == 0)
                            for (const Cell& c : d.cells) seen.insert({c.x, c.y});
                CHECK(o.cells.size() == seen.size());
                CHECK(o.lo.x == std::min_element(o.cells.begin(), o.cells.end(), [](Cell a, Cell b) { return a.x < b.x; })->x);
            }
        CHECK(chairs_near == 1);
    }
    SUBCASE("chairs 5 m apart stay distinct") {
        rep.integrate_observation(look(w, {4.5, 1.5, 0.0}));
        int chairs = 0;
        for (const auto& [id, o] : rep.objects()) chairs += o.category == "chair" ? 1 : 0;
        CHECK(chairs == 2);
    }
}

TEST_CASE("viewpoint admission examples") {
    const World w = load_map(fixture_path("open_room.json"));
    SceneParams params;
    params.viewpoint_eps = 30;
    SceneRep rep(w.map().width(), w.map().height(), w.resolution(), params);
    const Pose p{2.0, 2.0, 0.0};
    const Observation obs = look(w, p);
    rep.integrate_observation(obs);
    const auto expected = oracle_coverage(w, p, 6.0, params.d_cover);
    const auto cov = rep.coverage_cells(p, obs);
    CHECK(std::set<int>(cov.begin(), cov.end()) == expected);
    REQUIRE(expected.size() > 30);
    CHECK(rep.maybe_add_viewpoint(p, obs).has_value());
    // Identical pose: nothing new.
    rep.integrate_observation(obs);
    CHECK_FALSE(rep.maybe_add_viewpoint(p, obs).has_value());
    // A small step adds at most a thin sliver.
    const Pose q{2.1, 2.0, 0.0};
    const Observation obs_q = look(w, q);
    rep.integrate_observation(obs_q);
    int novel = 0;
    for (int i : oracle_coverage(w, q, 6.0, params.d_cover)) novel += expected.count(i) ? 0 : 1;
    CHECK(rep.maybe_add_viewpoint(q, obs_q).has_value() == (novel > 30));
}

TEST_CASE("segmentation examples") {
    SUBCASE("open square") {
        const World w = make_world(box_rows(30, 30));
        SceneRep rep(w.map().width(), w.map().height(), w.resolution());
        observe_everything(rep, w);
        rep.segment_rooms();
        CHECK(rep.rooms().size() == 1);
        CHECK(rep.room_edges().empty());
    }
    SUBCASE("wall with a two-cell door") {
        std::vector<std::string> rows = box_rows(30, 30);
        for (int y = 1; y <= 30; ++y)
            if (y != 15 && y != 16) rows[static_cast<std::size_t>(y)][16] = '#';
        const World w = raw_world(rows);
        SceneRep rep(w.map().width(), w.map().height(), w.resolution());
        observe_everything(rep, w);
        rep.segment_rooms(1);
        CHECK(rep.rooms().size() == 2);
        CHECK(rep.room_edges().size() == 1);
    }
    SUBCASE("threeroom fixture") {
        const World w = load_map(fixture_path("threeroom.json"));
        SceneRep rep(w.map().width(), w.map().height(), w.resolution());
        observe_everything(rep, w);
        rep.segment_rooms();
        CHECK(rep.rooms().size() == w.map().rooms.size());
        CHECK(rep.room_edges().size() == 2);
    }
}

TEST_CASE("segmentation invariants on generated maps") {
    const PriorsTable priors = PriorsTable::defaults();
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        GenParams p;
        p.rooms_x = 1 + static_cast<int>(seed % 3);
        p.rooms_y = seed % 2 ? 2 : 1;
        const World w = generate_map(seed, p, priors).world;
        SceneRep rep(w.map().width(), w.map().height(), w.resolution());
        observe_everything(rep, w);
        rep.segment_rooms();
        CHECK(rep.rooms().size() == w.map().rooms.size());
        std::set<int> all;
        for (const auto& [id, room] : rep.rooms()) {
            REQUIRE_FALSE(room.mask.empty());
            std::map<int, int> hits;
            for (int i : room.mask) {
                CHECK(all.insert(i).second);  // disjoint
                CHECK(rep.known_free(rep.belief().cell(i)));
                ++hits[w.map().rooms_gt[i]];
            }
            int best = 0;
            for (const auto& [_, n] : hits) best = std::max(best, n);
            CHECK(best >= 0.9 * static_cast<double>(room.mask.size()));
        }
    }
}

TEST_CASE("object merge soundness and view-object completeness") {
    const PriorsTable priors = PriorsTable::defaults();
    GenParams p;
    p.rooms_x = 2;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const World w = generate_map(seed, p, priors).world;
        SceneRep rep(w.map().width(), w.map().height(), w.resolution());
        for (int y = 3; y < w.map().height(); y += 7)
            for (int x = 3; x < w.map().width(); x += 7) {
                if (!footprint_clear(w, {x, y}, 0.3)) continue;
                const Vec2 c = cell_center({x, y}, w.resolution());
                const Pose pose{c.x(), c.y(), 0.0};
                const Observation obs = look(w, pose);
                const auto nodes = rep.integrate_observation(obs);
                if (const auto v = rep.maybe_add_viewpoint(pose, obs)) {
                    for (int n : nodes) CHECK(rep.view_object_edges().count({*v, n}) == 1);
                }
            }
        std::map<std::string, int> truth, nodes;
        for (const auto& o : w.objects()) ++truth[o.category];
        for (const auto& [_, o] : rep.objects()) ++nodes[o.category];
        CHECK(nodes == truth);
        for (const auto& [v, o] : rep.view_object_edges()) {
            CHECK(rep.viewpoints().count(v) == 1);
            CHECK(rep.objects().count(o) == 1);
        }
    }
}

TEST_CASE("attribute inference on demand") {
    const World w = make_world(box_rows(60, 30),
                               {{"chair", {20, 10, 23, 13}, {{"color", "red"}}}, {"chair", {40, 10, 43, 13}, {{"color", "blue"}}}});
    const PriorsTable priors = PriorsTable::defaults();
    OracleReasoner oracle(w, priors);
    CountingReasoner counter(oracle);
    SceneRep rep(w.map().width(), w.map().height(), w.resolution());

    CHECK(rep.infer_attribute_on_demand("chair", {"color", "red"}, counter) == 0);
    const Pose p{3.0, 2.5, 0.0};
    const Observation obs = look(w, p);
    rep.integrate_observation(obs);
    rep.force_viewpoint(p, obs);
    CHECK(rep.infer_attribute_on_demand("sofa", {"color", "red"}, counter) == 0);
    CHECK(rep.infer_attribute_on_demand("chair", {"color", "red"}, counter) == 2);
    int red = 0;
    for (const auto& [_, o] : rep.objects()) {
        REQUIRE(o.attributes.count("color"));
        red += o.attributes.at("color") == std::optional<std::string>("red") ? 1 : 0;
    }
    CHECK(red == 1);
    CHECK(rep.infer_attribute_on_demand("chair", {"color", "red"}, counter) == 0);
    CHECK(counter.attribute == 2);
}

TEST_CASE("relation inference on demand") {
    const World w = make_world(box_rows(100, 30), {{"refrigerator", {20, 10, 25, 15}, {}, false},
                                                   {"microwave", {31, 10, 34, 13}, {}, false},
                                                   {"microwave", {84, 10, 87, 13}, {}, false}});
    const PriorsTable priors = PriorsTable::defaults();
    OracleReasoner oracle(w, priors);
    SceneRep rep(w.map().width(), w.map().height(), w.resolution());
    int fridge = -1, near_mw = -1, far_mw = -1;

    // Never co-observed yet.
    const Pose left{1.0, 2.0, 0.0};
    const Observation o1 = look(w, left, 2.0);
    rep.integrate_observation(o1);
    rep.force_viewpoint(left, o1);
    const Pose right{9.5, 1.1, 0.0};
    const Observation o2 = look(w, right, 2.0);
    rep.integrate_observation(o2);
    rep.force_viewpoint(right, o2);
    for (const auto& [id, o] : rep.objects()) {
        if (o.category == "refrigerator") fridge = id;
        if (o.category == "microwave" && o.lo.x < 50) near_mw = id;
        if (o.category == "microwave" && o.lo.x > 50) far_mw = id;
    }
    REQUIRE(fridge >= 0);
    REQUIRE(far_mw >= 0);
    CHECK(rep.infer_relation_on_demand(far_mw, fridge, "near", oracle) == RelationResult::Undetermined);

    // One view sees all three.
    const Pose mid{5.0, 2.5, 0.0};
    const Observation o3 = look(w, mid, 10.0);
    rep.integrate_observation(o3);
    rep.force_viewpoint(mid, o3);
    for (const auto& [id, o] : rep.objects())
        if (o.category == "microwave" && o.lo.x < 50) near_mw = id;
    REQUIRE(near_mw >= 0);
    int queries = 0;
    CHECK(rep.infer_relation_on_demand(near_mw, fridge, "near", oracle, &queries) == RelationResult::Confirmed);
    CHECK(rep.relation_edges().count({near_mw, fridge, "near"}) == 1);
    CHECK(rep.infer_relation_on_demand(far_mw, fridge, "near", oracle, &queries) == RelationResult::Rejected);
    CHECK(queries == 2);
    CHECK(rep.relation_edges().size() == 1);
}

TEST_CASE("reasoner contexts") {
    const World w = load_map(fixture_path("threeroom.json"));
    SceneRep rep(w.map().width(), w.map().height(), w.resolution());
    observe_everything(rep, w);
    rep.segment_rooms();
    const Goal goal{"refrigerator", {}};
    const RoomQueryContext empty = rep.build_room_query({}, {}, {}, goal);
    CHECK(empty.uncovered.empty());
    const RoomQueryContext traj = rep.build_room_query({}, {}, {1, 2}, goal);
    CHECK(traj.trajectory == std::vector<int>{1, 2});

    // Observe the kitchen's objects, then summarise it.
    std::vector<int> ids;
    for (const auto& [id, r] : rep.rooms()) ids.push_back(id);
    REQUIRE(ids.size() == 3);
    const Observation kitchen = look(w, {10.5, 2.2, 0.0}, 4.0);
    rep.integrate_observation(kitchen);
    const int kid = rep.room_at(cell_at({10.5, 2.2}, w.resolution()));
    REQUIRE(kid >= 0);
    const int other = ids[0] == kid ? ids[1] : ids[0];
    const EarlyStopContext es = rep.build_early_stop(other, kid, goal);
    CHECK(es.candidate.id == kid);
    CHECK(std::count(es.candidate.objects.begin(), es.candidate.objects.end(), "refrigerator") == 1);
    CHECK(es.goal == goal);
}
