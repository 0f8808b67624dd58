#include "helpers.hpp"

#include "roomnav/bench.hpp"
#include "roomnav/map_gen.hpp"
#include "roomnav/render.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace roomnav;
using namespace roomnav::test;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

EpisodeResult result(bool success, double p, double l, double t, double timeout = 240.0) {
    EpisodeResult r;
    r.id = "r";
    r.success = success;
    r.declared = success;
    r.traveled_m = p;
    r.shortest_m = l;
    r.time_s = t;
    r.timeout_s = timeout;
    return r;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

/// Open room with a chair two metres ahead of the start.
SuiteEpisode easy_fixture(int k, const std::string& category = "chair") {
    auto world = std::make_shared<const World>(make_world(box_rows(40 + k, 30), {{"chair", {30, 13, 33, 16}}}));
    EpisodeSpec spec;
    spec.id = "fixture-" + std::to_string(k);
    spec.start = {1.05, 1.45, 0.0};
    spec.goal = {category, {}};
    spec.timeout_s = 60.0;
    spec.seed = static_cast<std::uint64_t>(k);
    spec.tier = "easy";
    return {spec, world};
}

SuiteOptions oracle_options(int parallel = 1) {
    SuiteOptions opt;
    opt.reasoner = oracle_factory(std::make_shared<const PriorsTable>(PriorsTable::defaults()));
    opt.parallel = parallel;
    return opt;
}

}  // namespace

TEST_CASE("SPL examples") {
    CHECK(compute_spl({result(true, 5.0, 5.0, 10.0)}) == doctest::Approx(100.0));
    CHECK(compute_spl({result(true, 10.0, 5.0, 10.0)}) == doctest::Approx(50.0));
    CHECK(compute_spl({result(true, 5.0, 5.0, 10.0), result(false, 3.0, 5.0, 10.0)}) == doctest::Approx(50.0));
    // Shorter than the oracle path (within a cell of rounding) is capped at 1.
    CHECK(compute_spl({result(true, 4.9, 5.0, 10.0)}) == doctest::Approx(100.0));
    CHECK(compute_spl({result(true, 0.0, 0.0, 0.0)}) == doctest::Approx(100.0));
}

TEST_CASE("SPT examples") {
    CHECK(compute_spt({result(true, 1.0, 1.0, 0.0)}) == doctest::Approx(100.0));
    CHECK(compute_spt({result(true, 1.0, 1.0, 240.0)}) == doctest::Approx(0.0));
    CHECK(compute_spt({result(true, 1.0, 1.0, 60.0)}) == doctest::Approx(75.0));
    CHECK(compute_spt({result(true, 1.0, 1.0, 90.0, 180.0), result(false, 1.0, 1.0, 10.0)}) == doctest::Approx(25.0));
}

TEST_CASE("metric identities on constructed sets") {
    Rng rng = make_rng(2, 0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<EpisodeResult> perfect_path, instant;
        for (int i = 0; i < 10; ++i) {
            const bool s = uniform01(rng) < 0.6;
            const double l = uniform(rng, 0.5, 20.0);
            perfect_path.push_back(result(s, l, l, uniform(rng, 1.0, 200.0)));
            instant.push_back(result(s, l * 1.5, l, 0.0));
        }
        CHECK(compute_spl(perfect_path) == doctest::Approx(compute_sr(perfect_path)).epsilon(1e-12));
        CHECK(compute_spt(instant) == doctest::Approx(compute_sr(instant)).epsilon(1e-12));
        const SuiteMetrics m = compute_metrics(perfect_path);
        CHECK(m.spl <= m.sr + 1e-12);
        CHECK(m.spt <= m.sr + 1e-12);
        CHECK(m.spl >= 0.0);
    }
}

TEST_CASE("AT averages successful episodes only") {
    CHECK(compute_at({result(true, 1, 1, 10.0), result(false, 1, 1, 99.0), result(true, 1, 1, 20.0)}) ==
          std::optional<double>(15.0));
    CHECK_FALSE(compute_at({result(false, 1, 1, 5.0)}).has_value());
}

TEST_CASE("empty suites report N = 0 and no metrics") {
    const json j = compute_metrics({}).to_json();
    CHECK(j.at("N") == 0);
    for (const char* k : {"SR", "SPL", "SPT", "AT"}) CHECK(j.at(k).is_null());
    CHECK(run_suite({}, oracle_options()).empty());
}

TEST_CASE("CSV round-trips every field") {
    std::vector<EpisodeResult> rs;
    EpisodeResult a = result(true, 3.141592653589793, 2.718281828459045, 17.3, 180.0);
    a.id = "hard,\"quoted\" id";
    a.room_visits = {0, 3, 1};
    a.queries = 12;
    a.reasoner_failures = 2;
    a.tier = "hard";
    rs.push_back(a);
    EpisodeResult b = result(false, 0.1, -1.0, 240.0);
    b.id = "plain";
    b.declared = true;
    b.error = "line one\nline two";
    rs.push_back(b);
    const std::string csv = results_to_csv(rs);
    CHECK(results_from_csv(csv) == rs);
    CHECK(results_to_csv(results_from_csv(csv)) == csv);
    CHECK_THROWS(results_from_csv("id,success\nx,1\n"));
}

TEST_CASE("suite: ten solvable fixtures, then one impossible goal") {
    std::vector<SuiteEpisode> eps;
    for (int k = 0; k < 10; ++k) eps.push_back(easy_fixture(k));
    const auto all = run_suite(eps, oracle_options());
    CHECK(compute_sr(all) == doctest::Approx(100.0));
    for (const auto& r : all) CHECK(r.error.empty());

    eps[4] = easy_fixture(4, "refrigerator");
    const auto one_bad = run_suite(eps, oracle_options());
    CHECK(compute_sr(one_bad) == doctest::Approx(90.0));
    CHECK_FALSE(one_bad[4].success);
}

TEST_CASE("suite results do not depend on parallelism") {
    std::vector<SuiteEpisode> eps;
    const PriorsTable priors = PriorsTable::defaults();
    for (std::uint64_t s = 0; s < 8; ++s) {
        GeneratedEpisode g = generate_episode(s, static_cast<Tier>(s % 5), priors);
        g.spec.id = "gen-" + std::to_string(s);
        eps.push_back({g.spec, std::make_shared<const World>(std::move(g.world))});
    }
    const auto serial = run_suite(eps, oracle_options(1));
    const auto wide = run_suite(eps, oracle_options(8));
    CHECK(serial == wide);
    CHECK(compute_metrics(serial).to_json().dump() == compute_metrics(wide).to_json().dump());
    CHECK(results_to_csv(serial) == results_to_csv(wide));
}

TEST_CASE("a crashing episode is recorded, the suite continues") {
    std::vector<SuiteEpisode> eps{easy_fixture(0), easy_fixture(1)};
    SuiteOptions opt = oracle_options();
    opt.reasoner = [inner = opt.reasoner](const World& w, const EpisodeSpec& s) -> std::unique_ptr<Reasoner> {
        if (s.id == "fixture-0") throw std::runtime_error("reasoner unavailable");
        return inner(w, s);
    };
    const auto rs = run_suite(eps, opt);
    REQUIRE(rs.size() == 2);
    CHECK_FALSE(rs[0].success);
    CHECK(rs[0].error.find("reasoner unavailable") != std::string::npos);
    CHECK(rs[1].success);
}

TEST_CASE("run seeds mix deterministically") {
    CHECK(mixed_seed(42, 0) == 42);
    CHECK(mixed_seed(42, 7) == mixed_seed(42, 7));
    CHECK(mixed_seed(42, 7) != mixed_seed(43, 7));
}

TEST_CASE("run configuration files round-trip") {
    const RunConfig cfg = RunConfig::load(std::string(ROOMNAV_SOURCE_DIR) + "/config/default.json");
    const RunConfig back = RunConfig::from_json(cfg.to_json());
    CHECK(back.to_json() == cfg.to_json());
    CHECK(cfg.profile("quadruped").radius == doctest::Approx(0.35));
    CHECK_THROWS_AS(cfg.profile("hovercraft"), std::invalid_argument);
}

TEST_CASE("single-room maps: the full system covers no worse than the flat baseline") {
    const PriorsTable priors = PriorsTable::defaults();
    double hier = 0.0, flat = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const GeneratedEpisode g = generate_episode(s, Tier::Medium, priors);
        REQUIRE(g.world.map().rooms.size() == 1);
        OracleReasoner oracle(g.world, priors);
        const EpisodeResult a = run_episode(g.world, g.spec, wheeled_profile(), oracle, {});
        const EpisodeResult b = run_flat_episode(g.world, g.spec, wheeled_profile(), {});
        REQUIRE(a.success);
        REQUIRE(b.success);
        hier += a.traveled_m;
        flat += b.traveled_m;
    }
    CHECK(hier <= 1.1 * flat);
}

TEST_CASE("render: an empty trace draws the map alone") {
    const World w = load_map(fixture_path("threeroom.json"));
    const std::string svg = render_svg(w, parse_trace(""));
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("polyline") == std::string::npos);
    CHECK(svg == render_svg(w, {}));
}

TEST_CASE("render: the golden trace renders byte for byte") {
    const World w = load_map(fixture_path("threeroom.json"));
    const auto events = parse_trace(read_file(fixture_path("threeroom_trace.jsonl")));
    const std::string svg = render_svg(w, events);
    CHECK(svg == render_svg(w, events));
    CHECK(svg == read_file(fixture_path("threeroom_trace.svg")));

    const fs::path out = fs::temp_directory_path() / "roomnav_render_test.svg";
    render_file(fixture_path("threeroom_trace.jsonl"), fixture_path("threeroom.json"), out.string());
    CHECK(read_file(out.string()) == svg);
    fs::remove(out);
}

TEST_CASE("render: schema errors name the offending line") {
    const std::string header =
        R"({"type":"header","version":1,"width":128,"height":44,"start":{"x":1.0,"y":1.0,"theta":0.0}})";
    const std::string rooms = R"({"type":"rooms","rooms":[{"id":0},{"id":1}]})";
    const std::string tick = R"({"type":"tick","t":0.1,"pose":{"x":1.0,"y":1.0,"theta":0.0},"room":7})";
    try {
        parse_trace(header + "\n" + rooms + "\n\n" + tick + "\n");
        FAIL("expected a trace error");
    } catch (const TraceError& e) {
        CHECK(e.line() == 4);
        CHECK(std::string(e.what()).find("line 4") != std::string::npos);
        CHECK(std::string(e.what()).find("unknown room id 7") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_trace(rooms + "\n"), TraceError);
    CHECK_THROWS_AS(parse_trace(header + "\n{broken\n"), TraceError);
    CHECK_THROWS_AS(parse_trace(header + "\n" + R"({"type":"dance"})" + "\n"), TraceError);

    // A header for another map size is rejected at render time.
    const World w = load_map(fixture_path("threeroom.json"));
    const auto small = parse_trace(
        R"({"type":"header","version":1,"width":10,"height":10,"start":{"x":1.0,"y":1.0,"theta":0.0}})");
    CHECK_THROWS(render_svg(w, small));
}
