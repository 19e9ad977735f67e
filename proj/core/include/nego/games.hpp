#ifndef NEGO_GAMES_HPP
#define NEGO_GAMES_HPP

#include <optional>
#include <string>
#include <vector>

#include "nego/graph.hpp"
#include "nego/model.hpp"

namespace nego {

struct NodeResult;

// The safety game G(N,B): Eve owns nodes outside B and picks results, Adam
// owns (node, result) positions and picks the process successor. Adam wins on
// reaching B, Eve on reaching n_fin.
struct GameArena {
    const Negotiation* neg;
    std::vector<bool> in_b;                        // per node
    std::vector<std::vector<bool>> forbidden_out;  // per node, per out position
    NodeIdx initial;
};

// B may also carry forbidden (node, result) pairs: the pair-omitting variant.
GameArena build_arena(const Negotiation& neg, const std::vector<NodeIdx>& b_nodes,
                      const std::vector<std::pair<NodeIdx, ResIdx>>& b_pairs = {});

struct StrategyMax {
    std::vector<bool> winning;                 // Eve's winning node positions W_E
    std::vector<std::vector<ResIdx>> sigma;    // per node: results whose successors all win
    bool eve_wins_from_initial = false;
};

// Greatest-fixpoint safety solution; the arena must come from an acyclic
// negotiation.
StrategyMax eve_winning(const GameArena& arena);

struct OmitInstance {
    std::vector<std::pair<NodeIdx, ResIdx>> include;  // P
    std::vector<NodeIdx> omit_nodes;                  // B
    std::vector<std::pair<NodeIdx, ResIdx>> omit_pairs;
};

struct OmitPlan {
    // Deterministic strategy restricted to the nodes the run visits.
    std::vector<std::pair<NodeIdx, ResIdx>> choices;  // topological order
    Run run;                                          // successful, includes P, omits B
};

// Solves the K-omitting problem for deterministic, acyclic, sound
// negotiations. Checks the preconditions itself (PreconditionError otherwise).
class OmitSolver {
public:
    explicit OmitSolver(const Negotiation& neg, uint32_t max_include = 4);

    std::optional<OmitPlan> solve(const OmitInstance& inst) const;

    const TopoOrder& topo() const { return topo_; }

private:
    const Negotiation* neg_;
    uint32_t max_include_;
    TopoOrder topo_;
};

std::optional<OmitPlan> solve_omitting(const Negotiation& neg, const OmitInstance& inst,
                                       uint32_t max_include = 4);

std::string render_plan(const Negotiation& neg, const OmitPlan& plan);

}  // namespace nego

#endif
