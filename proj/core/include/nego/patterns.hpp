#ifndef NEGO_PATTERNS_HPP
#define NEGO_PATTERNS_HPP

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nego/graph.hpp"
#include "nego/model.hpp"

namespace nego {

// A fork (p1, p2, end1, end2): from branch (node, result), two node-disjoint
// single-process paths lead to the two ends.
struct Fork {
    ProcIdx p1, p2;
    NodeIdx end1, end2;
    NodeIdx branch_node;
    ResIdx branch_result;
    std::vector<NegEdge> path1;  // p1-path from delta(branch, result, p1) to end1
    std::vector<NegEdge> path2;
};

struct PatternB {
    ProcIdx process;
    NodeIdx node;                       // reachable by a p-path, no p-path to fin
    std::vector<NegEdge> path_from_init;
};

struct PatternF {
    Fork fork;  // satisfies p2 in dom(end1) and p1 in dom(end2)
};

struct PatternC {
    std::vector<NegEdge> circuit;  // closed local path without a dominating node
};

using AntiPatternWitness = std::variant<PatternB, PatternF, PatternC>;

std::optional<PatternB> find_pattern_B(const Negotiation& neg);
std::optional<PatternC> find_pattern_C(const Negotiation& neg);
std::optional<PatternF> find_pattern_F(const Negotiation& neg);

struct ForkQuery {
    std::optional<std::pair<NodeIdx, NodeIdx>> fix_ends;
    bool cross_domain = false;  // require p2 in dom(end1) and p1 in dom(end2)
};

// Searches branch candidates and process pairs for a fork. Deterministic
// negotiations only. Acyclic inputs use the exact lock-step pair product;
// cyclic ones use the product as a prefilter plus exact path enumeration.
std::optional<Fork> find_fork(const Negotiation& neg, const ForkQuery& query = {});

struct DetSoundness {
    bool sound = false;
    std::optional<AntiPatternWitness> witness;
    std::vector<NodeIdx> dropped_nodes;  // not locally reachable from n_init
};

// Anti-pattern characterization: unsound iff B, F or C present (checked in
// that order). Requires a deterministic negotiation.
DetSoundness det_soundness(const Negotiation& neg);

std::string render_witness(const Negotiation& neg, const AntiPatternWitness& witness);
// Edges to highlight in a DOT overlay: the B path, the F branch edges plus
// both fork paths, or the C circuit.
std::vector<NegEdge> witness_edges(const Negotiation& neg, const AntiPatternWitness& witness);

// Checks used by tests and kept with the detectors: a reported witness must
// satisfy its defining conditions by direct inspection.
bool verify_fork(const Negotiation& neg, const Fork& fork);
bool verify_pattern(const Negotiation& neg, const AntiPatternWitness& witness);

}  // namespace nego

#endif
