#include "roomnav/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <cctype>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace roomnav {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

double compute_sr(const std::vector<EpisodeResult>& results) {
    if (results.empty()) return 0.0;
    int ok = 0;
    for (const auto& r : results) ok += r.success ? 1 : 0;
    return 100.0 * ok / static_cast<double>(results.size());
}

double compute_spl(const std::vector<EpisodeResult>& results) {
    if (results.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& r : results) {
        if (!r.success) continue;
        const double l = std::max(0.0, r.shortest_m);
        const double denom = std::max(r.traveled_m, l);
        sum += denom > 0.0 ? l / denom : 1.0;
    }
    return 100.0 * sum / static_cast<double>(results.size());
}

double compute_spt(const std::vector<EpisodeResult>& results) {
    if (results.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& r : results) {
        if (!r.success || r.timeout_s <= 0.0) continue;
        sum += std::clamp(1.0 - r.time_s / r.timeout_s, 0.0, 1.0);
    }
    return 100.0 * sum / static_cast<double>(results.size());
}

std::optional<double> compute_at(const std::vector<EpisodeResult>& results) {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : results)
        if (r.success) {
            sum += r.time_s;
            ++n;
        }
    if (n == 0) return std::nullopt;
    return sum / n;
}

SuiteMetrics compute_metrics(const std::vector<EpisodeResult>& results) {
    SuiteMetrics m;
    m.n = static_cast<int>(results.size());
    m.sr = compute_sr(results);
    m.spl = compute_spl(results);
    m.spt = compute_spt(results);
    m.at = compute_at(results);
    return m;
}

json SuiteMetrics::to_json() const {
    json j = {{"format", 1}, {"N", n}};
    if (n == 0) {
        j["SR"] = nullptr;
        j["SPL"] = nullptr;
        j["SPT"] = nullptr;
        j["AT"] = nullptr;
        return j;
    }
    j["SR"] = sr;
    j["SPL"] = spl;
    j["SPT"] = spt;
    j["AT"] = at ? json(*at) : json(nullptr);
    return j;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

const std::vector<std::string> kColumns = {"id",         "success", "declared", "time_s",  "traveled_m",
                                           "shortest_m", "room_visits", "queries", "reasoner_failures",
                                           "tier",       "timeout_s", "error"};

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

/// Splits one CSV record starting at `pos`; advances past its line break.
std::vector<std::string> read_record(const std::string& text, std::size_t& pos) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    while (pos < text.size()) {
        const char c = text[pos++];
        if (quoted) {
            if (c == '"') {
                if (pos < text.size() && text[pos] == '"') {
                    fields.back() += '"';
                    ++pos;
                } else {
                    quoted = false;
                }
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else if (c == '\n') {
            break;
        } else if (c != '\r') {
            fields.back() += c;
        }
    }
    if (quoted) throw std::invalid_argument("csv: unterminated quote");
    return fields;
}

double parse_double(const std::string& s, int line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("csv line " + std::to_string(line) + ": bad number '" + s + "'");
    }
}

int parse_int(const std::string& s, int line) {
    const double v = parse_double(s, line);
    if (v != std::floor(v)) throw std::invalid_argument("csv line " + std::to_string(line) + ": bad integer '" + s + "'");
    return static_cast<int>(v);
}

}  // namespace

std::string results_to_csv(const std::vector<EpisodeResult>& results) {
    std::string out;
    for (std::size_t i = 0; i < kColumns.size(); ++i) out += (i ? "," : "") + kColumns[i];
    out += "\n";
    for (const auto& r : results) {
        std::string visits;
        for (std::size_t i = 0; i < r.room_visits.size(); ++i) visits += (i ? ";" : "") + std::to_string(r.room_visits[i]);
        const std::vector<std::string> row = {quote(r.id),
                                              r.success ? "1" : "0",
                                              r.declared ? "1" : "0",
                                              fmt_double(r.time_s),
                                              fmt_double(r.traveled_m),
                                              fmt_double(r.shortest_m),
                                              visits,
                                              std::to_string(r.queries),
                                              std::to_string(r.reasoner_failures),
                                              quote(r.tier),
                                              fmt_double(r.timeout_s),
                                              quote(r.error)};
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + row[i];
        out += "\n";
    }
    return out;
}

std::vector<EpisodeResult> results_from_csv(const std::string& text) {
    std::size_t pos = 0;
    const auto header = read_record(text, pos);
    if (header != kColumns) throw std::invalid_argument("csv: unexpected header");
    std::vector<EpisodeResult> out;
    int line = 1;
    while (pos < text.size()) {
        ++line;
        const auto f = read_record(text, pos);
        if (f.size() == 1 && f[0].empty()) continue;
        if (f.size() != kColumns.size())
            throw std::invalid_argument("csv line " + std::to_string(line) + ": expected " +
                                        std::to_string(kColumns.size()) + " fields");
        EpisodeResult r;
        r.id = f[0];
        r.success = parse_int(f[1], line) != 0;
        r.declared = parse_int(f[2], line) != 0;
        r.time_s = parse_double(f[3], line);
        r.traveled_m = parse_double(f[4], line);
        r.shortest_m = parse_double(f[5], line);
        std::stringstream ss(f[6]);
        for (std::string tok; std::getline(ss, tok, ';');)
            if (!tok.empty()) r.room_visits.push_back(parse_int(tok, line));
        r.queries = parse_int(f[7], line);
        r.reasoner_failures = parse_int(f[8], line);
        r.tier = f[9];
        r.timeout_s = parse_double(f[10], line);
        r.error = f[11];
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------------

std::vector<SuiteEpisode> load_suite(const std::string& path) {
    const auto specs = load_episodes(path);
    const fs::path base = fs::path(path).parent_path();
    std::map<std::string, std::shared_ptr<const World>> cache;
    std::vector<SuiteEpisode> out;
    for (const auto& s : specs) {
        const std::string map_path = (base / s.map_path).string();
        auto& w = cache[map_path];
        if (!w) w = std::make_shared<const World>(load_map(map_path));
        out.push_back({s, w});
    }
    return out;
}

std::uint64_t mixed_seed(std::uint64_t episode_seed, std::uint64_t run_seed) {
    return run_seed == 0 ? episode_seed : hash_combine(episode_seed, run_seed);
}

ReasonerFactory oracle_factory(std::shared_ptr<const PriorsTable> priors, OracleOptions options) {
    return [priors, options](const World& world, const EpisodeSpec& spec) -> std::unique_ptr<Reasoner> {
        OracleOptions o = options;
        o.seed = hash_combine(options.seed, spec.seed);
        return std::make_unique<OracleReasoner>(world, *priors, o);
    };
}

namespace {

std::string sanitize_id(const std::string& id) {
    std::string out = id;
    for (char& c : out)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
    return out.empty() ? "episode" : out;
}

EpisodeResult run_one(const SuiteEpisode& ep, const SuiteOptions& opt) {
    EpisodeSpec spec = ep.spec;
    spec.seed = mixed_seed(spec.seed, opt.seed);
    EpisodeTrace trace;
    EpisodeTrace* tp = opt.trace_dir.empty() ? nullptr : &trace;
    EpisodeResult r;
    try {
        if (!ep.world) throw std::runtime_error("episode has no world");
        if (opt.agent == AgentKind::Flat) {
            r = run_flat_episode(*ep.world, spec, opt.profile, opt.config, tp);
        } else {
            if (!opt.reasoner) throw std::runtime_error("no reasoner factory");
            auto reasoner = opt.reasoner(*ep.world, spec);
            r = run_episode(*ep.world, spec, opt.profile, *reasoner, opt.config, tp);
        }
    } catch (const std::exception& e) {
        r = {};
        r.id = spec.id;
        r.tier = spec.tier;
        r.timeout_s = spec.timeout_s;
        r.error = e.what();
        if (r.error.empty()) r.error = "error";
    }
    if (tp) {
        try {
            trace.write((fs::path(opt.trace_dir) / (sanitize_id(spec.id) + ".jsonl")).string());
        } catch (const std::exception& e) {
            if (r.error.empty()) r.error = e.what();
        }
    }
    return r;
}

}  // namespace

std::vector<EpisodeResult> run_suite(const std::vector<SuiteEpisode>& episodes, const SuiteOptions& options) {
    std::vector<EpisodeResult> results(episodes.size());
    if (episodes.empty()) return results;
    if (!options.trace_dir.empty()) fs::create_directories(options.trace_dir);
    const int workers = std::clamp(options.parallel, 1, static_cast<int>(episodes.size()));
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (std::size_t i = next++; i < episodes.size(); i = next++) results[i] = run_one(episodes[i], options);
    };
    if (workers == 1) {
        work();
        return results;
    }
    std::vector<std::thread> pool;
    for (int k = 0; k < workers; ++k) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    return results;
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

json profile_to_json(const EmbodimentProfile& p) {
    return {{"id", p.id}, {"v_max", p.v_max}, {"omega_max", p.omega_max}, {"radius", p.radius},
            {"sensor_range", p.sensor_range}};
}

EmbodimentProfile profile_from_json(const json& j) {
    EmbodimentProfile p;
    p.id = j.at("id").get<std::string>();
    if (const auto preset = find_preset(p.id)) p = *preset;
    p.v_max = j.value("v_max", p.v_max);
    p.omega_max = j.value("omega_max", p.omega_max);
    p.radius = j.value("radius", p.radius);
    p.sensor_range = j.value("sensor_range", p.sensor_range);
    if (p.id.empty() || p.v_max <= 0.0 || p.omega_max <= 0.0 || p.radius < 0.0 || p.sensor_range <= 0.0)
        throw std::invalid_argument("profile '" + p.id + "': limits must be positive");
    return p;
}

RunConfig RunConfig::from_json(const json& j, const std::string& base_dir) {
    RunConfig c;
    if (j.value("format", 1) != 1) throw std::invalid_argument("config: unsupported format");
    if (j.contains("nav")) c.nav = NavConfig::from_json(j.at("nav"));
    if (j.contains("priors")) {
        const json& p = j.at("priors");
        PriorsTable table = p.is_string() ? PriorsTable::load((fs::path(base_dir) / p.get<std::string>()).string())
                                          : PriorsTable::from_json(p);
        c.priors = std::make_shared<const PriorsTable>(std::move(table));
    }
    if (j.contains("oracle")) {
        const json& o = j.at("oracle");
        c.oracle.margin = o.value("margin", c.oracle.margin);
        c.oracle.attribute_error_rate = o.value("attribute_error_rate", c.oracle.attribute_error_rate);
        c.oracle.room_confusion = o.value("room_confusion", c.oracle.room_confusion);
        c.oracle.seed = o.value("seed", c.oracle.seed);
        if (o.contains("relations")) c.oracle.relations = o.at("relations").get<std::vector<std::string>>();
    }
    if (j.contains("remote")) c.remote_timeout_s = j.at("remote").value("timeout_s", c.remote_timeout_s);
    if (c.remote_timeout_s <= 0.0) throw std::invalid_argument("config: remote.timeout_s must be positive");
    if (j.contains("profiles")) {
        for (const auto& pj : j.at("profiles")) {
            const EmbodimentProfile p = profile_from_json(pj);
            auto it = std::find_if(c.profiles.begin(), c.profiles.end(), [&](const auto& q) { return q.id == p.id; });
            if (it != c.profiles.end()) *it = p;
            else c.profiles.push_back(p);
        }
    }
    return c;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config " + path + ": " + e.what());
    }
    return from_json(j, fs::path(path).parent_path().string());
}

json RunConfig::to_json() const {
    json profs = json::array();
    for (const auto& p : profiles) profs.push_back(profile_to_json(p));
    return {{"format", 1},
            {"nav", nav.to_json()},
            {"priors", priors->to_json()},
            {"oracle",
             {{"margin", oracle.margin},
              {"attribute_error_rate", oracle.attribute_error_rate},
              {"room_confusion", oracle.room_confusion},
              {"seed", oracle.seed},
              {"relations", oracle.relations}}},
            {"remote", {{"timeout_s", remote_timeout_s}}},
            {"profiles", profs}};
}

EmbodimentProfile RunConfig::profile(const std::string& id) const {
    for (const auto& p : profiles)
        if (p.id == id) return p;
    throw std::invalid_argument("unknown profile '" + id + "'");
}

ReasonerFactory remote_factory(std::string endpoint, double timeout_s) {
    return [endpoint, timeout_s](const World&, const EpisodeSpec& spec) -> std::unique_ptr<Reasoner> {
        RemoteOptions o;
        o.endpoint = endpoint;
        o.timeout_s = timeout_s;
        o.episode = spec.id;
        o.goal = spec.goal;
        return std::make_unique<RemoteReasoner>(o);
    };
}

}  // namespace roomnav
