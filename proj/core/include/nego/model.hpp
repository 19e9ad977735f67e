#ifndef NEGO_MODEL_HPP
#define NEGO_MODEL_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace nego {

using NodeIdx = uint32_t;
using ProcIdx = uint32_t;
using ResIdx = uint32_t;

inline constexpr uint32_t kInvalidIdx = UINT32_MAX;

// Raw, string-level description of a negotiation as read from an .ngt file
// or built by hand. validate() turns it into an indexed Negotiation.
struct RawNegotiation {
    std::string name;
    std::vector<std::string> processes;
    std::string init;
    std::string fin;

    struct Node {
        std::string id;
        std::vector<std::string> domain;
    };
    struct Out {
        std::string node;
        std::vector<std::string> results;
    };
    struct Arc {
        std::string node;
        std::string result;
        std::string process;
        std::vector<std::string> targets;
    };

    std::vector<Node> nodes;
    std::vector<Out> outs;
    std::vector<Arc> arcs;
};

struct ValidateResult;
class Negotiation;
ValidateResult validate(const RawNegotiation& raw);

// A validated negotiation. All sets keep input-file order (processes, nodes,
// results), so every analysis downstream iterates deterministically.
class Negotiation {
public:
    std::string name;
    std::vector<std::string> processes;
    std::vector<std::string> nodes;
    std::vector<std::string> results;  // global result alphabet

    NodeIdx n_init = 0;
    NodeIdx n_fin = 0;

    // Per node: participating processes (sorted) and results (declaration order).
    std::vector<std::vector<ProcIdx>> dom;
    std::vector<std::vector<ResIdx>> out;

    // delta[n][oi][di]: sorted target nodes for (node n, out[n][oi], dom[n][di]).
    std::vector<std::vector<std::vector<std::vector<NodeIdx>>>> delta;

    // Result declared on n_fin without arcs. Not executable; used by data
    // specifications as the run's virtual last step.
    std::optional<ResIdx> fin_terminal_result;

    size_t node_count() const { return nodes.size(); }
    size_t process_count() const { return processes.size(); }

    bool in_dom(NodeIdx n, ProcIdx p) const;
    bool has_result(NodeIdx n, ResIdx r) const;
    // Position of r in out[n], or kInvalidIdx.
    uint32_t out_pos(NodeIdx n, ResIdx r) const;
    // Position of p in dom[n], or kInvalidIdx.
    uint32_t dom_pos(NodeIdx n, ProcIdx p) const;
    const std::vector<NodeIdx>& targets(NodeIdx n, ResIdx r, ProcIdx p) const;

    // Name lookups (throw std::out_of_range on unknown names).
    NodeIdx node_id(const std::string& s) const;
    ProcIdx proc_id(const std::string& s) const;
    ResIdx result_id(const std::string& s) const;

    bool operator==(const Negotiation& other) const;

private:
    friend ValidateResult validate(const RawNegotiation&);
    std::unordered_map<std::string, NodeIdx> node_by_name_;
    std::unordered_map<std::string, ProcIdx> proc_by_name_;
    std::unordered_map<std::string, ResIdx> result_by_name_;
};

struct ValidateResult {
    std::optional<Negotiation> negotiation;
    std::vector<std::string> errors;
    bool ok() const { return negotiation.has_value(); }
};

// Execution state: each process maps to the non-empty, sorted set of nodes
// it is ready to engage in.
struct Configuration {
    std::vector<std::vector<NodeIdx>> ready;

    bool operator==(const Configuration& other) const { return ready == other.ready; }
};

struct Step {
    NodeIdx node;
    ResIdx result;
    bool operator==(const Step& other) const {
        return node == other.node && result == other.result;
    }
};

struct Run {
    Configuration origin;
    std::vector<Step> steps;
};

struct ClassFlags {
    bool deterministic = false;
    bool weakly_nd = false;
    bool very_weakly_nd = false;
    bool acyclic = false;
    bool det_acyclic = false;
    bool all_nodes_locally_reachable = false;
};

class NegotiationError : public std::runtime_error {
public:
    enum class Kind { not_enabled, unknown_result, fin_not_executable, bad_configuration };
    NegotiationError(Kind kind, const std::string& what)
        : std::runtime_error(what), kind(kind) {}
    Kind kind;
};

class PreconditionError : public std::runtime_error {
public:
    explicit PreconditionError(const std::string& what) : std::runtime_error(what) {}
};

class BudgetExceeded : public std::runtime_error {
public:
    explicit BudgetExceeded(const std::string& what) : std::runtime_error(what) {}
};

Configuration initial_configuration(const Negotiation& neg);
Configuration final_configuration(const Negotiation& neg);

// Throws NegotiationError(bad_configuration) if c is malformed for neg.
void check_configuration(const Negotiation& neg, const Configuration& c);

// Nodes enabled in c, in node order.
std::vector<NodeIdx> enabled(const Negotiation& neg, const Configuration& c);

bool is_enabled(const Negotiation& neg, const Configuration& c, NodeIdx n);

// The final node is enabled: the run may stop here successfully.
bool is_terminal(const Negotiation& neg, const Configuration& c);

// A deadlock has nothing enabled at all (the final configuration is not one).
bool is_deadlock(const Negotiation& neg, const Configuration& c);

Configuration step(const Negotiation& neg, const Configuration& c, NodeIdx n, ResIdx a);

// Replays a run from its origin; returns every configuration visited,
// origin included. Throws if some step is not enabled when taken.
std::vector<Configuration> replay(const Negotiation& neg, const Run& run);

ClassFlags classify(const Negotiation& neg);

bool is_process_deterministic(const Negotiation& neg, ProcIdx p);
std::vector<ProcIdx> deterministic_processes(const Negotiation& neg);

// Restriction to a subset of processes: nodes with an empty restricted
// domain are dropped, delta is intersected with the surviving nodes.
Negotiation restrict_processes(const Negotiation& neg, const std::vector<ProcIdx>& keep);

std::string render_configuration(const Negotiation& neg, const Configuration& c);
std::string render_run(const Negotiation& neg, const Run& run);
std::string render_step(const Negotiation& neg, const Step& s);

}  // namespace nego

#endif
