#pragma once

#include "roomnav/gridworld.hpp"
#include "roomnav/priors.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace roomnav {

// ---------------------------------------------------------------------------
// Contexts
// ---------------------------------------------------------------------------

struct RoomSummary {
    int id = -1;
    std::string category;              // empty = Unlabeled
    std::vector<std::string> objects;  // categories of r-o linked object nodes
    double distance = -1.0;            // known-map path length from the agent, m (< 0 unknown)
};

struct ObjectSummary {
    int id = -1;
    std::string category;
    std::vector<Cell> cells;
};

struct EarlyStopContext {
    RoomSummary current;
    RoomSummary candidate;
    Goal goal;
};

struct RoomQueryContext {
    std::vector<RoomSummary> uncovered;
    std::vector<int> trajectory;  // ordered room-visit sequence
    Goal goal;
};

struct RoomLabelContext {
    int room_id = -1;
    Observation observation;  // restricted to the room's cells
};

struct AttributeContext {
    Observation observation;
    ObjectSummary object;
    std::string name;
};

struct RelationContext {
    Observation observation;
    ObjectSummary subject;
    ObjectSummary other;
    std::string relation;
};

using ReasonerContext =
    std::variant<EarlyStopContext, RoomQueryContext, RoomLabelContext, AttributeContext, RelationContext>;

std::string variant_name(const ReasonerContext& ctx);

enum class Verdict { True, False, Unknown };
std::string verdict_name(Verdict v);

/// Result of a room query: a room id, or nullopt for Exhausted.
using RoomChoice = std::optional<int>;

// ---------------------------------------------------------------------------
// Reasoner interface
// ---------------------------------------------------------------------------

/// Stateless semantic decision maker. Every method must return a usable answer;
/// implementations absorb their own failures.
class Reasoner {
public:
    virtual ~Reasoner() = default;

    virtual bool decide_early_stop(const EarlyStopContext& ctx) = 0;
    virtual RoomChoice select_room(const RoomQueryContext& ctx) = 0;
    /// Empty string = Unlabeled.
    virtual std::string classify_room(const RoomLabelContext& ctx) = 0;
    /// nullopt = Unknown.
    virtual std::optional<std::string> infer_attribute(const AttributeContext& ctx) = 0;
    virtual Verdict check_relation(const RelationContext& ctx) = 0;

    /// Number of failed calls absorbed by fallbacks (remote only).
    virtual int failures() const { return 0; }
};

/// Deterministic fallbacks shared by the remote client.
RoomChoice nearest_uncovered(const RoomQueryContext& ctx);

struct OracleOptions {
    double margin = 0.1;                 // early-stop prior hysteresis
    double attribute_error_rate = 0.0;   // 1.0 = always wrong
    double room_confusion = 0.0;         // probability of a wrong room label
    std::uint64_t seed = 0;
    std::vector<std::string> relations{"near", "on"};
};

/// Rule-based reasoner backed by ground truth and the priors table.
class OracleReasoner final : public Reasoner {
public:
    OracleReasoner(const World& world, const PriorsTable& priors, OracleOptions options = {});

    bool decide_early_stop(const EarlyStopContext& ctx) override;
    RoomChoice select_room(const RoomQueryContext& ctx) override;
    std::string classify_room(const RoomLabelContext& ctx) override;
    std::optional<std::string> infer_attribute(const AttributeContext& ctx) override;
    Verdict check_relation(const RelationContext& ctx) override;

    /// Decides any context and returns the decision in wire form.
    nlohmann::json decide(const ReasonerContext& ctx);

private:
    /// Ground-truth instance of `category` seen in `obs` overlapping `cells`.
    const ObjectInstance* resolve(const Observation& obs, const ObjectSummary& object) const;

    const World& world_;
    const PriorsTable& priors_;
    OracleOptions options_;
};

// ---------------------------------------------------------------------------
// Wire format
// ---------------------------------------------------------------------------

/// Largest number of cells a serialized observation carries (a 64x64 grid).
inline constexpr std::size_t kMaxWireCells = 64 * 64;

nlohmann::json context_to_json(const ReasonerContext& ctx);
ReasonerContext context_from_json(const nlohmann::json& j);

struct RemoteOptions {
    std::string endpoint;  // http://host:port
    double timeout_s = 10.0;
    std::string episode;   // forwarded so a test server can identify the scene
    Goal goal;             // sent with contexts that do not carry one
};

/// POSTs contexts to {endpoint}/decide. Timeouts, transport errors and schema
/// errors fall back per variant: EarlyStop -> false, RoomQuery -> nearest
/// uncovered room, everything else -> Unknown.
class RemoteReasoner final : public Reasoner {
public:
    explicit RemoteReasoner(RemoteOptions options);

    bool decide_early_stop(const EarlyStopContext& ctx) override;
    RoomChoice select_room(const RoomQueryContext& ctx) override;
    std::string classify_room(const RoomLabelContext& ctx) override;
    std::optional<std::string> infer_attribute(const AttributeContext& ctx) override;
    Verdict check_relation(const RelationContext& ctx) override;

    int failures() const override { return failures_; }
    const std::vector<std::string>& errors() const { return errors_; }

private:
    std::optional<nlohmann::json> call(const ReasonerContext& ctx);

    RemoteOptions options_;
    int failures_ = 0;
    std::vector<std::string> errors_;
};

/// Environment variable naming the remote endpoint.
inline constexpr const char* kEndpointEnv = "ROOMNAV_REASONER_URL";

}  // namespace roomnav
