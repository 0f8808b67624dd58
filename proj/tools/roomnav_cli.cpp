#include "roomnav/bench.hpp"
#include "roomnav/map_gen.hpp"
#include "roomnav/render.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace roomnav;

namespace {

struct RunArgs {
    std::string suite;
    std::string config;
    std::string reasoner = "oracle";
    std::string profile = "wheeled";
    std::uint64_t seed = 0;
    int parallel = 1;
    std::string out = "out";
    bool no_trace = false;
    bool flat = false;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
}

void add_run_options(CLI::App& cmd, RunArgs& a) {
    cmd.add_option("--suite", a.suite, "Episode file")->required()->check(CLI::ExistingFile);
    cmd.add_option("--config", a.config, "Run configuration file")->check(CLI::ExistingFile);
    cmd.add_option("--profile", a.profile, "Embodiment profile id");
    cmd.add_option("--seed", a.seed, "Run seed mixed into every episode seed (0 keeps them)");
    cmd.add_option("--parallel", a.parallel, "Concurrent episodes")->check(CLI::PositiveNumber);
    cmd.add_option("--out", a.out, "Output directory");
    cmd.add_flag("--no-trace", a.no_trace, "Skip per-episode traces");
}

int run_suite_cmd(const RunArgs& a, AgentKind agent) {
    const RunConfig cfg = a.config.empty() ? RunConfig{} : RunConfig::load(a.config);
    SuiteOptions opt;
    opt.agent = agent;
    opt.profile = cfg.profile(a.profile);
    opt.config = cfg.nav;
    opt.parallel = a.parallel;
    opt.seed = a.seed;
    if (agent == AgentKind::Hierarchical) {
        if (a.reasoner == "oracle") {
            opt.reasoner = oracle_factory(cfg.priors, cfg.oracle);
        } else {
            const char* url = std::getenv(kEndpointEnv);
            if (!url || !*url) throw std::invalid_argument(std::string("--reasoner remote needs ") + kEndpointEnv);
            opt.reasoner = remote_factory(url, cfg.remote_timeout_s);
        }
    }
    fs::create_directories(a.out);
    if (!a.no_trace) opt.trace_dir = (fs::path(a.out) / "traces").string();

    const auto episodes = load_suite(a.suite);
    const auto results = run_suite(episodes, opt);
    const SuiteMetrics m = compute_metrics(results);
    write_text(fs::path(a.out) / "metrics.json", m.to_json().dump(2) + "\n");
    write_text(fs::path(a.out) / "episodes.csv", results_to_csv(results));
    int errors = 0;
    for (const auto& r : results)
        if (!r.error.empty()) {
            ++errors;
            std::cerr << "episode " << r.id << ": " << r.error << "\n";
        }
    std::cout << m.to_json().dump() << "\n";
    if (errors) std::cerr << errors << " episode(s) aborted\n";
    return 0;
}

struct GenArgs {
    std::uint64_t seed = 0;
    int count = 10;
    std::string tiers = "easy,medium,hard,attribute,relation";
    std::string params;
    std::string priors;
    std::string out = "maps";
};

int gen_maps_cmd(const GenArgs& a) {
    const PriorsTable priors = a.priors.empty() ? PriorsTable::defaults() : PriorsTable::load(a.priors);
    const fs::path out(a.out);
    fs::create_directories(out / "maps");
    if (!a.params.empty()) {
        std::ifstream f(a.params);
        if (!f) throw std::runtime_error("cannot read " + a.params);
        const GenParams params = GenParams::from_json(json::parse(f));
        for (int i = 0; i < a.count; ++i) {
            const std::uint64_t s = a.seed + static_cast<std::uint64_t>(i);
            const GeneratedMap g = generate_map(s, params, priors);
            write_text(out / "maps" / ("map-" + std::to_string(s) + ".json"), world_to_json(g.world).dump() + "\n");
        }
        std::cout << "wrote " << a.count << " maps to " << (out / "maps").string() << "\n";
        return 0;
    }
    std::vector<Tier> tiers;
    std::stringstream ss(a.tiers);
    for (std::string t; std::getline(ss, t, ',');)
        if (!t.empty()) tiers.push_back(tier_from_name(t));
    if (tiers.empty()) throw std::invalid_argument("no tiers given");
    std::vector<EpisodeSpec> specs;
    for (int i = 0; i < a.count; ++i) {
        const Tier tier = tiers[static_cast<std::size_t>(i) % tiers.size()];
        const std::uint64_t s = a.seed + static_cast<std::uint64_t>(i);
        GeneratedEpisode ep = generate_episode(s, tier, priors);
        const std::string name = tier_name(tier) + "-" + std::to_string(s);
        ep.spec.id = name;
        ep.spec.map_path = "maps/" + name + ".json";
        write_text(out / ep.spec.map_path, world_to_json(ep.world).dump() + "\n");
        specs.push_back(ep.spec);
    }
    write_text(out / "episodes.json", episodes_to_json(specs).dump(2) + "\n");
    std::cout << "wrote " << specs.size() << " episodes to " << (out / "episodes.json").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Room-aware object navigation benchmark"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "Run the hierarchical agent over a suite");
    add_run_options(*run, run_args);
    run->add_option("--reasoner", run_args.reasoner, "Reasoner backend")
        ->check(CLI::IsMember({"oracle", "remote"}));

    RunArgs base_args;
    auto* baseline = app.add_subcommand("baseline", "Run a comparator agent over a suite");
    add_run_options(*baseline, base_args);
    baseline->add_flag("--flat", base_args.flat, "Room-agnostic nearest-frontier agent")->required();

    std::string trace_path, map_path, image_path;
    auto* render = app.add_subcommand("render", "Render a trace over its map as SVG");
    render->add_option("--trace", trace_path, "Trace file (JSON lines)")->required()->check(CLI::ExistingFile);
    render->add_option("--map", map_path, "Map file")->required()->check(CLI::ExistingFile);
    render->add_option("--out", image_path, "Output SVG")->required();

    GenArgs gen_args;
    auto* gen = app.add_subcommand("gen-maps", "Generate maps and an episode file");
    gen->add_option("--seed", gen_args.seed, "First seed");
    gen->add_option("--count", gen_args.count, "Number of episodes or maps")->check(CLI::PositiveNumber);
    gen->add_option("--tiers", gen_args.tiers, "Comma-separated tiers, cycled");
    gen->add_option("--params", gen_args.params, "Generator parameters; writes bare maps")->check(CLI::ExistingFile);
    gen->add_option("--priors", gen_args.priors, "Priors table")->check(CLI::ExistingFile);
    gen->add_option("--out", gen_args.out, "Output directory");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) return run_suite_cmd(run_args, AgentKind::Hierarchical);
        if (*baseline) return run_suite_cmd(base_args, AgentKind::Flat);
        if (*render) {
            render_file(trace_path, map_path, image_path);
            return 0;
        }
        if (*gen) return gen_maps_cmd(gen_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
