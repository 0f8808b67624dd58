#pragma once

#include "roomnav/policy.hpp"
#include "roomnav/priors.hpp"

#include <json.hpp>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace roomnav {

struct SuiteMetrics {
    int n = 0;
    double sr = 0.0;   // %
    double spl = 0.0;  // %
    double spt = 0.0;  // %
    std::optional<double> at;  // s, mean time over successes

    nlohmann::json to_json() const;
};

double compute_sr(const std::vector<EpisodeResult>& results);
/// (1/N) sum S_i l_i / max(p_i, l_i), in percent. l = p = 0 counts as ratio 1.
double compute_spl(const std::vector<EpisodeResult>& results);
/// (1/N) sum S_i (1 - t_i / T_i), in percent.
double compute_spt(const std::vector<EpisodeResult>& results);
std::optional<double> compute_at(const std::vector<EpisodeResult>& results);
SuiteMetrics compute_metrics(const std::vector<EpisodeResult>& results);

std::string results_to_csv(const std::vector<EpisodeResult>& results);
std::vector<EpisodeResult> results_from_csv(const std::string& text);

/// An episode with its world resolved.
struct SuiteEpisode {
    EpisodeSpec spec;
    std::shared_ptr<const World> world;
};

/// Loads an episode file and every map it references (paths relative to the file).
std::vector<SuiteEpisode> load_suite(const std::string& path);

enum class AgentKind { Hierarchical, Flat };

using ReasonerFactory = std::function<std::unique_ptr<Reasoner>(const World&, const EpisodeSpec&)>;

struct SuiteOptions {
    AgentKind agent = AgentKind::Hierarchical;
    EmbodimentProfile profile = wheeled_profile();
    NavConfig config;
    ReasonerFactory reasoner;     // required for the hierarchical agent
    int parallel = 1;
    std::string trace_dir;        // empty = no traces
    std::uint64_t seed = 0;       // mixed into every episode seed when non-zero
};

/// Runs every episode independently; results keep the input order. An
/// exception inside one episode is recorded as a failure with its message.
std::vector<EpisodeResult> run_suite(const std::vector<SuiteEpisode>& episodes, const SuiteOptions& options);

/// Episode seed after mixing in a run seed.
std::uint64_t mixed_seed(std::uint64_t episode_seed, std::uint64_t run_seed);

/// Contents of a run configuration file.
struct RunConfig {
    NavConfig nav;
    std::shared_ptr<const PriorsTable> priors = std::make_shared<const PriorsTable>(PriorsTable::defaults());
    OracleOptions oracle;
    double remote_timeout_s = 10.0;
    std::vector<EmbodimentProfile> profiles = preset_profiles();

    /// `base_dir` resolves a priors path given as a string.
    static RunConfig from_json(const nlohmann::json& j, const std::string& base_dir = ".");
    static RunConfig load(const std::string& path);
    /// Priors are always written inline.
    nlohmann::json to_json() const;

    /// Throws std::invalid_argument for unknown ids.
    EmbodimentProfile profile(const std::string& id) const;
};

nlohmann::json profile_to_json(const EmbodimentProfile& p);
EmbodimentProfile profile_from_json(const nlohmann::json& j);

/// Reasoner factory for the rule-based oracle.
ReasonerFactory oracle_factory(std::shared_ptr<const PriorsTable> priors, OracleOptions options = {});
/// Reasoner factory for the HTTP client; each episode gets its own client.
ReasonerFactory remote_factory(std::string endpoint, double timeout_s);

}  // namespace roomnav
