#ifndef NEGO_GRAPH_HPP
#define NEGO_GRAPH_HPP

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nego/model.hpp"

namespace nego {

// The graph of a negotiation: hyper-arcs expanded to plain labeled edges.
struct NegEdge {
    NodeIdx from;
    ProcIdx process;
    ResIdx result;
    NodeIdx to;
    bool operator==(const NegEdge& other) const {
        return from == other.from && process == other.process &&
               result == other.result && to == other.to;
    }
};

class NegGraph {
public:
    explicit NegGraph(const Negotiation& neg);

    const Negotiation& negotiation() const { return *neg_; }
    const std::vector<NegEdge>& edges() const { return edges_; }
    // Edge indices leaving / entering a node, in edge insertion order.
    const std::vector<uint32_t>& out_edges(NodeIdx n) const { return fwd_[n]; }
    const std::vector<uint32_t>& in_edges(NodeIdx n) const { return bwd_[n]; }
    size_t node_count() const { return fwd_.size(); }

private:
    const Negotiation* neg_;
    std::vector<NegEdge> edges_;
    std::vector<std::vector<uint32_t>> fwd_;
    std::vector<std::vector<uint32_t>> bwd_;
};

NegGraph graph_of(const Negotiation& neg);

struct TopoOrder {
    // order[i] = i-th node in the topological order; pos[n] = position of n.
    std::vector<NodeIdx> order;
    std::vector<uint32_t> pos;

    bool before(NodeIdx a, NodeIdx b) const { return pos[a] < pos[b]; }
};

struct CycleError {
    // A genuine cycle of the graph, as a closed node sequence (first == last).
    std::vector<NodeIdx> cycle;
};

// Kahn order with ties broken by node input order; CycleError on cyclic input.
// Every negotiation caches one order so downstream verdicts are reproducible.
std::variant<TopoOrder, CycleError> topo_order(const NegGraph& graph);
std::variant<TopoOrder, CycleError> topo_order(const Negotiation& neg);

enum class Direction { fwd, bwd };

// Nodes connected to sources via edges labeled with process p (reflexive).
std::vector<NodeIdx> p_reach(const NegGraph& graph, ProcIdx p,
                             const std::vector<NodeIdx>& sources, Direction dir);

// Plain directed reachability over all labels (reflexive).
std::vector<NodeIdx> local_reach(const NegGraph& graph, const std::vector<NodeIdx>& sources);

// Shortest p-path from any source to target as an edge sequence, if one exists.
std::optional<std::vector<NegEdge>> p_path(const NegGraph& graph, ProcIdx p,
                                           const std::vector<NodeIdx>& sources,
                                           NodeIdx target);

// Shortest mixed-label path from any source to target.
std::optional<std::vector<NegEdge>> local_path(const NegGraph& graph,
                                               const std::vector<NodeIdx>& sources,
                                               NodeIdx target);

// A strongly connected component of the filtered subgraph that contains at
// least one vertex from each required set and at least one edge, if any.
// vertex_filter empty means "all vertices".
struct SccQuery {
    std::vector<bool> vertex_filter;
    std::vector<std::vector<NodeIdx>> required_hits;
};

std::optional<std::vector<NodeIdx>> find_scc(const NegGraph& graph, const SccQuery& query);

// All strongly connected components of the filtered subgraph, each sorted,
// ordered by smallest member. filter empty means "all vertices".
std::vector<std::vector<NodeIdx>> all_sccs(const NegGraph& graph,
                                           const std::vector<bool>& filter);

// DOT rendering with edge labels "p:a"; highlight_edges get a bold red pen.
std::string graph_dot(const NegGraph& graph, const std::vector<NegEdge>& highlight_edges = {});

}  // namespace nego

#endif
