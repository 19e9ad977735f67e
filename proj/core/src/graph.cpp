#include "nego/graph.hpp"

#include <algorithm>
#include <deque>
#include <queue>
#include <sstream>

namespace nego {

NegGraph::NegGraph(const Negotiation& neg) : neg_(&neg) {
    size_t nn = neg.node_count();
    fwd_.resize(nn);
    bwd_.resize(nn);
    for (NodeIdx n = 0; n < nn; ++n)
        for (uint32_t oi = 0; oi < neg.out[n].size(); ++oi)
            for (uint32_t di = 0; di < neg.dom[n].size(); ++di)
                for (NodeIdx t : neg.delta[n][oi][di]) {
                    uint32_t e = static_cast<uint32_t>(edges_.size());
                    edges_.push_back({n, neg.dom[n][di], neg.out[n][oi], t});
                    fwd_[n].push_back(e);
                    bwd_[t].push_back(e);
                }
}

NegGraph graph_of(const Negotiation& neg) { return NegGraph(neg); }

namespace {

std::vector<NodeIdx> extract_cycle(const NegGraph& graph, const std::vector<bool>& leftover) {
    // Walk predecessors from the smallest leftover node until one repeats:
    // every leftover node keeps at least one leftover predecessor, while
    // leftover sinks may have no leftover successor.
    size_t nn = graph.node_count();
    NodeIdx start = 0;
    while (start < nn && !leftover[start]) ++start;
    std::vector<int> on_stack(nn, -1);
    std::vector<NodeIdx> stack;
    NodeIdx cur = start;
    while (on_stack[cur] < 0) {
        on_stack[cur] = static_cast<int>(stack.size());
        stack.push_back(cur);
        NodeIdx prev = kInvalidIdx;
        for (uint32_t e : graph.in_edges(cur)) {
            NodeIdx t = graph.edges()[e].from;
            if (leftover[t] && (prev == kInvalidIdx || t < prev)) prev = t;
        }
        cur = prev;
    }
    // The backwards walk stack[k..] plus cur closes a cycle; forward order is
    // the reverse.
    std::vector<NodeIdx> cycle(stack.begin() + on_stack[cur], stack.end());
    cycle.push_back(cur);
    std::reverse(cycle.begin(), cycle.end());
    return cycle;
}

}  // namespace

std::variant<TopoOrder, CycleError> topo_order(const NegGraph& graph) {
    size_t nn = graph.node_count();
    std::vector<uint32_t> indeg(nn, 0);
    for (NodeIdx n = 0; n < nn; ++n) {
        std::vector<NodeIdx> succs;
        for (uint32_t e : graph.out_edges(n)) succs.push_back(graph.edges()[e].to);
        std::sort(succs.begin(), succs.end());
        succs.erase(std::unique(succs.begin(), succs.end()), succs.end());
        for (NodeIdx t : succs) ++indeg[t];
    }
    std::priority_queue<NodeIdx, std::vector<NodeIdx>, std::greater<>> ready;
    for (NodeIdx n = 0; n < nn; ++n)
        if (indeg[n] == 0) ready.push(n);

    TopoOrder topo;
    topo.pos.assign(nn, kInvalidIdx);
    while (!ready.empty()) {
        NodeIdx n = ready.top();
        ready.pop();
        topo.pos[n] = static_cast<uint32_t>(topo.order.size());
        topo.order.push_back(n);
        std::vector<NodeIdx> succs;
        for (uint32_t e : graph.out_edges(n)) succs.push_back(graph.edges()[e].to);
        std::sort(succs.begin(), succs.end());
        succs.erase(std::unique(succs.begin(), succs.end()), succs.end());
        for (NodeIdx t : succs)
            if (--indeg[t] == 0) ready.push(t);
    }
    if (topo.order.size() != nn) {
        std::vector<bool> leftover(nn, false);
        for (NodeIdx n = 0; n < nn; ++n)
            if (topo.pos[n] == kInvalidIdx) leftover[n] = true;
        return CycleError{extract_cycle(graph, leftover)};
    }
    return topo;
}

std::variant<TopoOrder, CycleError> topo_order(const Negotiation& neg) {
    return topo_order(NegGraph(neg));
}

namespace {

template <typename EdgeKeep>
std::vector<NodeIdx> reach_impl(const NegGraph& graph, const std::vector<NodeIdx>& sources,
                                Direction dir, EdgeKeep keep) {
    std::vector<bool> seen(graph.node_count(), false);
    std::vector<NodeIdx> queue;
    for (NodeIdx s : sources)
        if (!seen[s]) {
            seen[s] = true;
            queue.push_back(s);
        }
    for (size_t i = 0; i < queue.size(); ++i) {
        NodeIdx n = queue[i];
        const auto& es = dir == Direction::fwd ? graph.out_edges(n) : graph.in_edges(n);
        for (uint32_t e : es) {
            if (!keep(graph.edges()[e])) continue;
            NodeIdx t = dir == Direction::fwd ? graph.edges()[e].to : graph.edges()[e].from;
            if (!seen[t]) {
                seen[t] = true;
                queue.push_back(t);
            }
        }
    }
    std::vector<NodeIdx> out;
    for (NodeIdx n = 0; n < graph.node_count(); ++n)
        if (seen[n]) out.push_back(n);
    return out;
}

template <typename EdgeKeep>
std::optional<std::vector<NegEdge>> path_impl(const NegGraph& graph,
                                              const std::vector<NodeIdx>& sources,
                                              NodeIdx target, EdgeKeep keep) {
    std::vector<uint32_t> via(graph.node_count(), kInvalidIdx);
    std::vector<bool> seen(graph.node_count(), false);
    std::deque<NodeIdx> queue;
    for (NodeIdx s : sources)
        if (!seen[s]) {
            seen[s] = true;
            queue.push_back(s);
        }
    if (!queue.empty() && seen[target]) return std::vector<NegEdge>{};
    while (!queue.empty()) {
        NodeIdx n = queue.front();
        queue.pop_front();
        for (uint32_t e : graph.out_edges(n)) {
            if (!keep(graph.edges()[e])) continue;
            NodeIdx t = graph.edges()[e].to;
            if (seen[t]) continue;
            seen[t] = true;
            via[t] = e;
            if (t == target) {
                std::vector<NegEdge> path;
                NodeIdx cur = t;
                while (via[cur] != kInvalidIdx) {
                    path.push_back(graph.edges()[via[cur]]);
                    cur = graph.edges()[via[cur]].from;
                }
                std::reverse(path.begin(), path.end());
                return path;
            }
            queue.push_back(t);
        }
    }
    return std::nullopt;
}

}  // namespace

std::vector<NodeIdx> p_reach(const NegGraph& graph, ProcIdx p,
                             const std::vector<NodeIdx>& sources, Direction dir) {
    return reach_impl(graph, sources, dir,
                      [p](const NegEdge& e) { return e.process == p; });
}

std::vector<NodeIdx> local_reach(const NegGraph& graph, const std::vector<NodeIdx>& sources) {
    return reach_impl(graph, sources, Direction::fwd, [](const NegEdge&) { return true; });
}

std::optional<std::vector<NegEdge>> p_path(const NegGraph& graph, ProcIdx p,
                                           const std::vector<NodeIdx>& sources,
                                           NodeIdx target) {
    return path_impl(graph, sources, target,
                     [p](const NegEdge& e) { return e.process == p; });
}

std::optional<std::vector<NegEdge>> local_path(const NegGraph& graph,
                                               const std::vector<NodeIdx>& sources,
                                               NodeIdx target) {
    return path_impl(graph, sources, target, [](const NegEdge&) { return true; });
}

namespace {

struct TarjanState {
    const NegGraph& graph;
    const std::vector<bool>* filter;
    std::vector<int> index, low, stack_pos;
    std::vector<NodeIdx> stack;
    int counter = 0;
    std::vector<std::vector<NodeIdx>> sccs;

    explicit TarjanState(const NegGraph& g, const std::vector<bool>* f)
        : graph(g), filter(f), index(g.node_count(), -1), low(g.node_count(), -1),
          stack_pos(g.node_count(), -1) {}

    bool kept(NodeIdx n) const { return !filter || filter->empty() || (*filter)[n]; }

    void run(NodeIdx root) {
        // Iterative Tarjan.
        struct Frame {
            NodeIdx n;
            size_t edge;
        };
        std::vector<Frame> frames{{root, 0}};
        index[root] = low[root] = counter++;
        stack_pos[root] = static_cast<int>(stack.size());
        stack.push_back(root);
        while (!frames.empty()) {
            Frame& f = frames.back();
            const auto& es = graph.out_edges(f.n);
            bool descended = false;
            while (f.edge < es.size()) {
                const NegEdge& e = graph.edges()[es[f.edge++]];
                if (!kept(e.to)) continue;
                if (index[e.to] < 0) {
                    index[e.to] = low[e.to] = counter++;
                    stack_pos[e.to] = static_cast<int>(stack.size());
                    stack.push_back(e.to);
                    frames.push_back({e.to, 0});
                    descended = true;
                    break;
                }
                if (stack_pos[e.to] >= 0) low[f.n] = std::min(low[f.n], index[e.to]);
            }
            if (descended) continue;
            if (low[f.n] == index[f.n]) {
                std::vector<NodeIdx> scc(stack.begin() + stack_pos[f.n], stack.end());
                for (NodeIdx m : scc) stack_pos[m] = -1;
                stack.resize(stack.size() - scc.size());
                std::sort(scc.begin(), scc.end());
                sccs.push_back(std::move(scc));
            }
            NodeIdx done = f.n;
            frames.pop_back();
            if (!frames.empty()) low[frames.back().n] = std::min(low[frames.back().n], low[done]);
        }
    }
};

}  // namespace

std::vector<std::vector<NodeIdx>> all_sccs(const NegGraph& graph,
                                           const std::vector<bool>& filter) {
    const std::vector<bool>* f = filter.empty() ? nullptr : &filter;
    TarjanState tarjan(graph, f);
    for (NodeIdx n = 0; n < graph.node_count(); ++n)
        if (tarjan.kept(n) && tarjan.index[n] < 0) tarjan.run(n);
    std::sort(tarjan.sccs.begin(), tarjan.sccs.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return std::move(tarjan.sccs);
}

std::optional<std::vector<NodeIdx>> find_scc(const NegGraph& graph, const SccQuery& query) {
    const std::vector<bool>* filter = query.vertex_filter.empty() ? nullptr : &query.vertex_filter;
    TarjanState tarjan(graph, filter);
    for (NodeIdx n = 0; n < graph.node_count(); ++n)
        if (tarjan.kept(n) && tarjan.index[n] < 0) tarjan.run(n);

    auto has_internal_edge = [&](const std::vector<NodeIdx>& scc) {
        for (NodeIdx n : scc)
            for (uint32_t e : graph.out_edges(n))
                if (std::binary_search(scc.begin(), scc.end(), graph.edges()[e].to) &&
                    tarjan.kept(graph.edges()[e].to))
                    return true;
        return false;
    };

    std::optional<std::vector<NodeIdx>> best;
    for (const auto& scc : tarjan.sccs) {
        bool all_hit = true;
        for (const auto& hits : query.required_hits) {
            bool hit = false;
            for (NodeIdx h : hits) hit = hit || std::binary_search(scc.begin(), scc.end(), h);
            all_hit = all_hit && hit;
        }
        if (!all_hit || !has_internal_edge(scc)) continue;
        if (!best || scc.front() < best->front()) best = scc;
    }
    return best;
}

std::string graph_dot(const NegGraph& graph, const std::vector<NegEdge>& highlight_edges) {
    const Negotiation& neg = graph.negotiation();
    std::ostringstream os;
    os << "digraph \"" << neg.name << "\" {\n";
    for (NodeIdx n = 0; n < neg.node_count(); ++n) {
        os << "  " << neg.nodes[n] << " [shape=box";
        if (n == neg.n_init) os << ", style=bold";
        if (n == neg.n_fin) os << ", peripheries=2";
        os << "];\n";
    }
    for (const NegEdge& e : graph.edges()) {
        bool hl = std::find(highlight_edges.begin(), highlight_edges.end(), e) !=
                  highlight_edges.end();
        os << "  " << neg.nodes[e.from] << " -> " << neg.nodes[e.to] << " [label=\""
           << neg.processes[e.process] << ":" << neg.results[e.result] << "\"";
        if (hl) os << ", color=red, penwidth=2.0";
        os << "];\n";
    }
    os << "}\n";
    return os.str();
}

}  // namespace nego
