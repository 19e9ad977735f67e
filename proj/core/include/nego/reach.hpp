#ifndef NEGO_REACH_HPP
#define NEGO_REACH_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nego/data.hpp"
#include "nego/model.hpp"

namespace nego {

// Explicit reachability graph over configurations. Deliberately naive: this
// is the reference semantics every fast algorithm is tested against.
class ReachGraph {
public:
    struct Edge {
        uint32_t from;
        NodeIdx node;
        ResIdx result;
        uint32_t to;
    };

    static constexpr size_t kDefaultBudget = 1000000;

    // Exhaustive BFS from the initial configuration (or `origin`).
    // Throws BudgetExceeded past `budget` configurations.
    ReachGraph(const Negotiation& neg, size_t budget = kDefaultBudget);
    ReachGraph(const Negotiation& neg, const Configuration& origin, size_t budget);

    const Negotiation& negotiation() const { return *neg_; }
    size_t size() const { return first_edge_.size() - 1; }
    uint32_t initial() const { return 0; }
    Configuration configuration(uint32_t idx) const;
    const std::vector<Edge>& edges() const { return edges_; }
    // Half-open range of edge indices leaving a configuration.
    std::pair<uint32_t, uint32_t> edge_range(uint32_t idx) const {
        return {first_edge_[idx], first_edge_[idx + 1]};
    }
    bool terminal(uint32_t idx) const { return terminal_[idx]; }
    const std::vector<uint32_t>& terminals() const { return terminal_list_; }

    // Shortest run from the origin to the given configuration (BFS tree).
    Run run_to(uint32_t idx) const;

    std::string dot() const;

private:
    friend class ReachExplorer;
    const Negotiation* neg_;
    Configuration origin_;
    // Flattened configurations: per process a ready-set id into set_pool_.
    std::vector<uint32_t> config_cells_;
    std::vector<std::vector<NodeIdx>> set_pool_;
    std::vector<Edge> edges_;
    std::vector<uint32_t> first_edge_;  // CSR over edges_ (sorted by from)
    std::vector<bool> terminal_;
    std::vector<bool> deadlock_;
    std::vector<uint32_t> terminal_list_;
    std::vector<uint32_t> parent_edge_;  // BFS tree, kInvalidIdx at origin

public:
    bool deadlock(uint32_t idx) const { return deadlock_[idx]; }
};

struct SoundnessVerdict {
    bool sound = false;
    std::optional<Run> witness;  // shortest initial run to a doomed configuration
};

// Sound iff every reachable configuration can reach a terminal one (a
// configuration enabling n_fin).
SoundnessVerdict oracle_sound(const ReachGraph& graph);
SoundnessVerdict oracle_sound(const Negotiation& neg, size_t budget = ReachGraph::kDefaultBudget);

struct OmitQuery {
    std::vector<NodeResult> include;     // P (virtual fin pairs allowed)
    std::vector<NodeIdx> omit_nodes;     // B
    std::vector<NodeResult> omit_pairs;  // pair-omitting variant
};

// A successful run containing every pair of P and avoiding B, if one exists.
// Explores (configuration, satisfied-subset) states; budget caps them.
std::optional<Run> oracle_omit(const Negotiation& neg, const OmitQuery& query,
                               size_t budget = ReachGraph::kDefaultBudget);

// A reachable configuration enabling both m and n (absence if domains meet).
std::optional<Configuration> oracle_concurrent(const ReachGraph& graph, NodeIdx m, NodeIdx n);
std::optional<Configuration> oracle_concurrent(const Negotiation& neg, NodeIdx m, NodeIdx n,
                                               size_t budget = ReachGraph::kDefaultBudget);

struct SpecWitness {
    NodeResult first;
    NodeResult second;
    Run run;
    size_t first_index;   // positions in the extended step sequence
    size_t second_index;  // (the virtual fin step sits one past the last real step)
};

// Violation witness for (O1, O2, O) by phase-product search; works on cyclic
// inputs. Pairs are scanned in fixture order so reports are deterministic.
std::optional<SpecWitness> oracle_spec(const DataNegotiation& dneg, const DataSpec& spec,
                                       size_t budget = ReachGraph::kDefaultBudget);

// Lemma-style realization: a run from c that realizes the local path,
// interleavings avoiding each pinned process. Deterministic + sound inputs.
Run realize_path(const Negotiation& neg, const std::vector<NegEdge>& path,
                 const Configuration& c, size_t budget = ReachGraph::kDefaultBudget);

// Equivalent run (adjacent swaps of disjoint-domain steps) respecting the
// cached topological order. Acyclic negotiations only.
Run reorder_topologically(const Negotiation& neg, const Run& run);

}  // namespace nego

#endif
