#include "nego/patterns.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <sstream>
#include <unordered_map>

namespace nego {

namespace {

std::vector<bool> to_mask(size_t n, const std::vector<NodeIdx>& nodes) {
    std::vector<bool> mask(n, false);
    for (NodeIdx x : nodes) mask[x] = true;
    return mask;
}

}  // namespace

std::optional<PatternB> find_pattern_B(const Negotiation& neg) {
    NegGraph graph(neg);
    for (ProcIdx p = 0; p < neg.process_count(); ++p) {
        auto fwd = p_reach(graph, p, {neg.n_init}, Direction::fwd);
        auto bwd_mask = to_mask(neg.node_count(), p_reach(graph, p, {neg.n_fin}, Direction::bwd));
        for (NodeIdx n : fwd) {
            if (bwd_mask[n]) continue;
            auto path = p_path(graph, p, {neg.n_init}, n);
            return PatternB{p, n, path.value()};
        }
    }
    return std::nullopt;
}

std::optional<PatternC> find_pattern_C(const Negotiation& neg) {
    NegGraph graph(neg);
    auto reachable = to_mask(neg.node_count(), local_reach(graph, {neg.n_init}));

    std::vector<uint32_t> sizes;
    for (NodeIdx n = 0; n < neg.node_count(); ++n)
        if (reachable[n]) sizes.push_back(static_cast<uint32_t>(neg.dom[n].size()));
    std::sort(sizes.begin(), sizes.end());
    sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());

    for (uint32_t m : sizes) {
        std::vector<bool> filter(neg.node_count(), false);
        for (NodeIdx n = 0; n < neg.node_count(); ++n)
            filter[n] = reachable[n] && neg.dom[n].size() <= m;

        // One SCC pass per size bound; a component carries the pattern for
        // process p when p occurs somewhere in it but misses some node of
        // domain size exactly m.
        auto sccs = all_sccs(graph, filter);
        std::vector<bool> present(neg.process_count());
        std::vector<uint32_t> max_missing(neg.process_count());
        for (const auto& scc : sccs) {
            // Trivial components (no internal edge) carry no circuit; they
            // dominate the count, so bail out before any per-process work.
            bool has_edge = false;
            for (NodeIdx n : scc) {
                for (uint32_t e : graph.out_edges(n))
                    if (filter[graph.edges()[e].to] &&
                        std::binary_search(scc.begin(), scc.end(), graph.edges()[e].to)) {
                        has_edge = true;
                        break;
                    }
                if (has_edge) break;
            }
            if (!has_edge) continue;

            std::fill(present.begin(), present.end(), false);
            // max_missing[q] counts size-m nodes missing q.
            std::fill(max_missing.begin(), max_missing.end(), 0);
            uint32_t max_nodes = 0;
            for (NodeIdx n : scc) {
                for (ProcIdx q : neg.dom[n]) present[q] = true;
                if (neg.dom[n].size() == m) {
                    ++max_nodes;
                    for (ProcIdx q = 0; q < neg.process_count(); ++q) ++max_missing[q];
                    for (ProcIdx q : neg.dom[n]) --max_missing[q];
                }
            }
            if (max_nodes == 0) continue;
            ProcIdx p = kInvalidIdx;
            for (ProcIdx q = 0; q < neg.process_count(); ++q)
                if (present[q] && max_missing[q] > 0) {
                    p = q;
                    break;
                }
            if (p == kInvalidIdx) continue;

            NodeIdx u = kInvalidIdx, v = kInvalidIdx;
            for (NodeIdx n : scc) {
                if (u == kInvalidIdx && neg.dom[n].size() == m && !neg.in_dom(n, p)) u = n;
                if (v == kInvalidIdx && neg.in_dom(n, p)) v = n;
            }
            auto in_scc = to_mask(neg.node_count(), scc);

            // Closed local path through u and v inside the component.
            auto path_within = [&](NodeIdx from, NodeIdx to) {
                std::vector<uint32_t> via(neg.node_count(), kInvalidIdx);
                std::vector<bool> seen(neg.node_count(), false);
                std::deque<NodeIdx> queue{from};
                seen[from] = true;
                while (!queue.empty()) {
                    NodeIdx cur = queue.front();
                    queue.pop_front();
                    for (uint32_t e : graph.out_edges(cur)) {
                        NodeIdx t = graph.edges()[e].to;
                        if (!in_scc[t]) continue;
                        if (t == to && cur != to) {
                            std::vector<NegEdge> path{graph.edges()[e]};
                            NodeIdx walk = cur;
                            while (via[walk] != kInvalidIdx) {
                                path.push_back(graph.edges()[via[walk]]);
                                walk = graph.edges()[via[walk]].from;
                            }
                            std::reverse(path.begin(), path.end());
                            return path;
                        }
                        if (!seen[t]) {
                            seen[t] = true;
                            via[t] = e;
                            queue.push_back(t);
                        }
                    }
                }
                return std::vector<NegEdge>{};
            };

            PatternC pattern;
            if (u == v) continue;  // impossible: the hit sets are p-disjoint
            auto there = path_within(u, v);
            auto back = path_within(v, u);
            pattern.circuit = there;
            pattern.circuit.insert(pattern.circuit.end(), back.begin(), back.end());
            if (pattern.circuit.empty()) continue;

            // Canonical start: rotate to the smallest node on the circuit.
            size_t best = 0;
            for (size_t i = 1; i < pattern.circuit.size(); ++i)
                if (pattern.circuit[i].from < pattern.circuit[best].from) best = i;
            std::rotate(pattern.circuit.begin(), pattern.circuit.begin() + best,
                        pattern.circuit.end());
            if (verify_pattern(neg, pattern)) return pattern;
        }
    }
    return std::nullopt;
}

namespace {

// Pair-product search for two node-disjoint single-process paths starting at
// (s1, s2). Acyclic mode advances the topologically smaller active token,
// which makes the product exact; cyclic mode allows any interleaving and is
// only a prefilter.
struct PairProduct {
    const Negotiation& neg;
    const NegGraph& graph;
    ProcIdx p1, p2;
    const TopoOrder* topo;  // null = cyclic mode
    // Tokens may only end on accept-eligible nodes; pruning the end
    // declarations keeps the product small on long deterministic walks.
    std::function<bool(NodeIdx)> end1_ok, end2_ok;

    struct ParentRec {
        uint64_t state;
        uint32_t edge;   // kInvalidIdx for the "declare done" move
        int which;       // 0 = token 1 moved/done, 1 = token 2
    };
    std::unordered_map<uint64_t, ParentRec> parent;
    std::deque<uint64_t> queue;

    static uint64_t key(NodeIdx u, NodeIdx v, bool d1, bool d2) {
        return ((static_cast<uint64_t>(u) << 21 | v) << 2) | (d1 ? 2u : 0u) | (d2 ? 1u : 0u);
    }
    static void unkey(uint64_t k, NodeIdx& u, NodeIdx& v, bool& d1, bool& d2) {
        d2 = k & 1;
        d1 = k & 2;
        v = static_cast<NodeIdx>((k >> 2) & ((1u << 21) - 1));
        u = static_cast<NodeIdx>(k >> 23);
    }

    void push(uint64_t state, uint64_t from, uint32_t edge, int which) {
        if (parent.count(state)) return;
        parent[state] = {from, edge, which};
        queue.push_back(state);
    }

    // Runs BFS; calls accept(u, v) on every fully-done state; returns the
    // first accepted state key or nullopt.
    template <typename Accept>
    std::optional<uint64_t> run(NodeIdx s1, NodeIdx s2, Accept accept) {
        if (s1 == s2) return std::nullopt;
        uint64_t init = key(s1, s2, false, false);
        parent[init] = {UINT64_MAX, kInvalidIdx, -1};
        queue.push_back(init);
        while (!queue.empty()) {
            uint64_t state = queue.front();
            queue.pop_front();
            NodeIdx u, v;
            bool d1, d2;
            unkey(state, u, v, d1, d2);
            if (d1 && d2) {
                if (accept(u, v)) return state;
                continue;
            }
            bool may_move1, may_move2;
            if (topo) {
                may_move1 = !d1 && (d2 || topo->pos[u] < topo->pos[v]);
                may_move2 = !d2 && (d1 || topo->pos[v] < topo->pos[u]);
            } else {
                may_move1 = !d1;
                may_move2 = !d2;
            }
            if (!d1 && end1_ok(u)) push(key(u, v, true, d2), state, kInvalidIdx, 0);
            if (!d2 && end2_ok(v)) push(key(u, v, d1, true), state, kInvalidIdx, 1);
            if (may_move1)
                for (uint32_t e : graph.out_edges(u)) {
                    const NegEdge& edge = graph.edges()[e];
                    if (edge.process != p1 || edge.to == v) continue;
                    push(key(edge.to, v, d1, d2), state, e, 0);
                }
            if (may_move2)
                for (uint32_t e : graph.out_edges(v)) {
                    const NegEdge& edge = graph.edges()[e];
                    if (edge.process != p2 || edge.to == u) continue;
                    push(key(u, edge.to, d1, d2), state, e, 1);
                }
        }
        return std::nullopt;
    }

    // Token paths leading to a state, in forward order.
    std::pair<std::vector<NegEdge>, std::vector<NegEdge>> extract(uint64_t state) const {
        std::vector<NegEdge> r1, r2;
        uint64_t cur = state;
        while (true) {
            auto it = parent.find(cur);
            const ParentRec& rec = it->second;
            if (rec.state == UINT64_MAX) break;
            if (rec.edge != kInvalidIdx)
                (rec.which == 0 ? r1 : r2).push_back(graph.edges()[rec.edge]);
            cur = rec.state;
        }
        std::reverse(r1.begin(), r1.end());
        std::reverse(r2.begin(), r2.end());
        return {r1, r2};
    }
};

std::vector<NodeIdx> path_nodes(NodeIdx start, const std::vector<NegEdge>& path) {
    std::vector<NodeIdx> nodes{start};
    for (const NegEdge& e : path) nodes.push_back(e.to);
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    return nodes;
}

bool node_disjoint(NodeIdx s1, const std::vector<NegEdge>& path1, NodeIdx s2,
                   const std::vector<NegEdge>& path2) {
    auto n1 = path_nodes(s1, path1);
    auto n2 = path_nodes(s2, path2);
    std::vector<NodeIdx> shared;
    std::set_intersection(n1.begin(), n1.end(), n2.begin(), n2.end(),
                          std::back_inserter(shared));
    return shared.empty();
}

// Exact search used to certify cyclic candidates: enumerate simple p1-paths
// from s1 to end1 by DFS; for each, look for a p2-path from s2 to end2 that
// avoids its nodes. Work is capped; the cap is generous for test-sized inputs.
std::optional<std::pair<std::vector<NegEdge>, std::vector<NegEdge>>> exact_disjoint_paths(
    const Negotiation& neg, const NegGraph& graph, ProcIdx p1, ProcIdx p2, NodeIdx s1,
    NodeIdx s2, NodeIdx end1, NodeIdx end2, size_t step_cap = 2000000) {
    std::vector<bool> on_path(neg.node_count(), false);
    std::vector<NegEdge> path1;
    size_t steps = 0;

    std::optional<std::pair<std::vector<NegEdge>, std::vector<NegEdge>>> found;

    auto try_path2 = [&]() -> bool {
        // BFS over p2-edges avoiding on_path nodes.
        if (on_path[s2] || on_path[end2]) return false;
        std::vector<uint32_t> via(neg.node_count(), kInvalidIdx);
        std::vector<bool> seen(neg.node_count(), false);
        std::deque<NodeIdx> queue{s2};
        seen[s2] = true;
        if (s2 == end2) {
            found = {path1, {}};
            return true;
        }
        while (!queue.empty()) {
            NodeIdx cur = queue.front();
            queue.pop_front();
            for (uint32_t e : graph.out_edges(cur)) {
                const NegEdge& edge = graph.edges()[e];
                if (edge.process != p2 || seen[edge.to] || on_path[edge.to]) continue;
                seen[edge.to] = true;
                via[edge.to] = e;
                if (edge.to == end2) {
                    std::vector<NegEdge> path2;
                    NodeIdx walk = end2;
                    while (via[walk] != kInvalidIdx) {
                        path2.push_back(graph.edges()[via[walk]]);
                        walk = graph.edges()[via[walk]].from;
                    }
                    std::reverse(path2.begin(), path2.end());
                    found = {path1, path2};
                    return true;
                }
                queue.push_back(edge.to);
            }
        }
        return false;
    };

    std::function<bool(NodeIdx)> dfs = [&](NodeIdx cur) -> bool {
        if (++steps > step_cap)
            throw BudgetExceeded("fork certification exceeded its search cap");
        on_path[cur] = true;
        if (cur == end1 && try_path2()) {
            on_path[cur] = false;
            return true;
        }
        for (uint32_t e : graph.out_edges(cur)) {
            const NegEdge& edge = graph.edges()[e];
            if (edge.process != p1 || on_path[edge.to]) continue;
            path1.push_back(edge);
            if (dfs(edge.to)) {
                on_path[cur] = false;
                return true;
            }
            path1.pop_back();
        }
        on_path[cur] = false;
        return false;
    };

    if (dfs(s1)) return found;
    return std::nullopt;
}

}  // namespace

std::optional<Fork> find_fork(const Negotiation& neg, const ForkQuery& query) {
    for (ProcIdx p = 0; p < neg.process_count(); ++p)
        if (!is_process_deterministic(neg, p))
            throw PreconditionError("fork search needs a deterministic negotiation");

    NegGraph graph(neg);
    auto reachable = to_mask(neg.node_count(), local_reach(graph, {neg.n_init}));
    auto topo_var = topo_order(graph);
    const TopoOrder* topo =
        std::holds_alternative<TopoOrder>(topo_var) ? &std::get<TopoOrder>(topo_var) : nullptr;

    for (NodeIdx n = 0; n < neg.node_count(); ++n) {
        if (!reachable[n] || neg.dom[n].size() < 2) continue;
        for (uint32_t oi = 0; oi < neg.out[n].size(); ++oi) {
            for (uint32_t di1 = 0; di1 < neg.dom[n].size(); ++di1)
                for (uint32_t di2 = 0; di2 < neg.dom[n].size(); ++di2) {
                    if (di1 == di2) continue;
                    ProcIdx p1 = neg.dom[n][di1], p2 = neg.dom[n][di2];
                    NodeIdx s1 = neg.delta[n][oi][di1][0];
                    NodeIdx s2 = neg.delta[n][oi][di2][0];
                    if (s1 == s2) continue;

                    auto end1_ok = [&](NodeIdx u) {
                        if (query.fix_ends) return u == query.fix_ends->first;
                        return !query.cross_domain || neg.in_dom(u, p2);
                    };
                    auto end2_ok = [&](NodeIdx v) {
                        if (query.fix_ends) return v == query.fix_ends->second;
                        return !query.cross_domain || neg.in_dom(v, p1);
                    };
                    auto accept = [&](NodeIdx u, NodeIdx v) {
                        return end1_ok(u) && end2_ok(v);
                    };

                    PairProduct product{neg, graph, p1, p2, topo, end1_ok, end2_ok, {}, {}};
                    std::optional<uint64_t> hit;
                    std::vector<std::pair<NodeIdx, NodeIdx>> cyclic_candidates;
                    if (topo) {
                        hit = product.run(s1, s2, accept);
                        if (!hit) continue;
                        auto [path1, path2] = product.extract(*hit);
                        NodeIdx u, v;
                        bool d1, d2;
                        PairProduct::unkey(*hit, u, v, d1, d2);
                        Fork fork{p1, p2, u, v, n, neg.out[n][oi], path1, path2};
                        return fork;
                    }
                    // Cyclic: collect candidate end pairs, then certify each.
                    product.run(s1, s2, [&](NodeIdx u, NodeIdx v) {
                        if (accept(u, v)) cyclic_candidates.push_back({u, v});
                        return false;
                    });
                    for (auto [u, v] : cyclic_candidates) {
                        auto certified =
                            exact_disjoint_paths(neg, graph, p1, p2, s1, s2, u, v);
                        if (certified) {
                            Fork fork{p1,         p2, u, v, n, neg.out[n][oi],
                                      certified->first, certified->second};
                            return fork;
                        }
                    }
                }
        }
    }
    return std::nullopt;
}

std::optional<PatternF> find_pattern_F(const Negotiation& neg) {
    ForkQuery query;
    query.cross_domain = true;
    auto fork = find_fork(neg, query);
    if (!fork) return std::nullopt;
    return PatternF{*fork};
}

DetSoundness det_soundness(const Negotiation& neg) {
    ClassFlags flags = classify(neg);
    if (!flags.deterministic)
        throw PreconditionError("anti-pattern soundness needs a deterministic negotiation");

    DetSoundness result;
    NegGraph graph(neg);
    auto reachable = to_mask(neg.node_count(), local_reach(graph, {neg.n_init}));
    for (NodeIdx n = 0; n < neg.node_count(); ++n)
        if (!reachable[n]) result.dropped_nodes.push_back(n);

    if (auto b = find_pattern_B(neg)) {
        result.witness = AntiPatternWitness{*b};
        return result;
    }
    if (auto f = find_pattern_F(neg)) {
        result.witness = AntiPatternWitness{*f};
        return result;
    }
    if (auto c = find_pattern_C(neg)) {
        result.witness = AntiPatternWitness{*c};
        return result;
    }
    result.sound = true;
    return result;
}

bool verify_fork(const Negotiation& neg, const Fork& fork) {
    if (!neg.in_dom(fork.branch_node, fork.p1) || !neg.in_dom(fork.branch_node, fork.p2))
        return false;
    if (!neg.in_dom(fork.end1, fork.p1) || !neg.in_dom(fork.end2, fork.p2)) return false;
    if (!neg.has_result(fork.branch_node, fork.branch_result)) return false;

    NegGraph graph(neg);
    auto reachable = to_mask(neg.node_count(), local_reach(graph, {neg.n_init}));
    if (!reachable[fork.branch_node]) return false;

    auto check_path = [&](ProcIdx p, NodeIdx start, NodeIdx end,
                          const std::vector<NegEdge>& path) {
        NodeIdx cur = start;
        for (const NegEdge& e : path) {
            if (e.from != cur || e.process != p) return false;
            const auto& tgts = neg.targets(e.from, e.result, e.process);
            if (!std::binary_search(tgts.begin(), tgts.end(), e.to)) return false;
            cur = e.to;
        }
        return cur == end;
    };
    NodeIdx s1 = neg.targets(fork.branch_node, fork.branch_result, fork.p1)[0];
    NodeIdx s2 = neg.targets(fork.branch_node, fork.branch_result, fork.p2)[0];
    if (!check_path(fork.p1, s1, fork.end1, fork.path1)) return false;
    if (!check_path(fork.p2, s2, fork.end2, fork.path2)) return false;
    return node_disjoint(s1, fork.path1, s2, fork.path2);
}

bool verify_pattern(const Negotiation& neg, const AntiPatternWitness& witness) {
    NegGraph graph(neg);
    if (const auto* b = std::get_if<PatternB>(&witness)) {
        auto fwd = to_mask(neg.node_count(),
                           p_reach(graph, b->process, {neg.n_init}, Direction::fwd));
        auto bwd = to_mask(neg.node_count(),
                           p_reach(graph, b->process, {neg.n_fin}, Direction::bwd));
        return fwd[b->node] && !bwd[b->node];
    }
    if (const auto* f = std::get_if<PatternF>(&witness)) {
        return verify_fork(neg, f->fork) && neg.in_dom(f->fork.end1, f->fork.p2) &&
               neg.in_dom(f->fork.end2, f->fork.p1);
    }
    const auto& c = std::get<PatternC>(witness);
    if (c.circuit.empty()) return false;
    NodeIdx cur = c.circuit.front().from;
    for (const NegEdge& e : c.circuit) {
        if (e.from != cur) return false;
        const auto& tgts = neg.targets(e.from, e.result, e.process);
        if (!std::binary_search(tgts.begin(), tgts.end(), e.to)) return false;
        cur = e.to;
    }
    if (cur != c.circuit.front().from) return false;

    std::vector<NodeIdx> nodes;
    for (const NegEdge& e : c.circuit) nodes.push_back(e.from);
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

    auto reachable = to_mask(neg.node_count(), local_reach(graph, {neg.n_init}));
    bool any_reachable = false;
    for (NodeIdx n : nodes) any_reachable = any_reachable || reachable[n];
    if (!any_reachable) return false;

    // No dominating node: every circuit node misses some circuit node's domain.
    for (NodeIdx n : nodes) {
        bool dominates = true;
        for (NodeIdx m : nodes)
            dominates = dominates && std::includes(neg.dom[n].begin(), neg.dom[n].end(),
                                                   neg.dom[m].begin(), neg.dom[m].end());
        if (dominates) return false;
    }
    return true;
}

std::vector<NegEdge> witness_edges(const Negotiation& neg, const AntiPatternWitness& witness) {
    if (const auto* b = std::get_if<PatternB>(&witness)) return b->path_from_init;
    if (const auto* f = std::get_if<PatternF>(&witness)) {
        const Fork& fork = f->fork;
        NodeIdx s1 = neg.targets(fork.branch_node, fork.branch_result, fork.p1)[0];
        NodeIdx s2 = neg.targets(fork.branch_node, fork.branch_result, fork.p2)[0];
        std::vector<NegEdge> edges{{fork.branch_node, fork.p1, fork.branch_result, s1},
                                   {fork.branch_node, fork.p2, fork.branch_result, s2}};
        edges.insert(edges.end(), fork.path1.begin(), fork.path1.end());
        edges.insert(edges.end(), fork.path2.begin(), fork.path2.end());
        return edges;
    }
    return std::get<PatternC>(witness).circuit;
}

std::string render_witness(const Negotiation& neg, const AntiPatternWitness& witness) {
    std::ostringstream os;
    auto render_path = [&](const std::vector<NegEdge>& path) {
        if (path.empty()) {
            os << " (arrives directly)";
            return;
        }
        for (const NegEdge& e : path)
            os << " " << neg.nodes[e.from] << " -(" << neg.processes[e.process] << ":"
               << neg.results[e.result] << ")-> " << neg.nodes[e.to];
    };
    if (const auto* b = std::get_if<PatternB>(&witness)) {
        os << "pattern B: process " << neg.processes[b->process] << " reaches "
           << neg.nodes[b->node] << " with no " << neg.processes[b->process] << "-path to "
           << neg.nodes[neg.n_fin] << ";";
        render_path(b->path_from_init);
    } else if (const auto* f = std::get_if<PatternF>(&witness)) {
        const Fork& fork = f->fork;
        os << "pattern F: fork (" << neg.processes[fork.p1] << "," << neg.processes[fork.p2]
           << "," << neg.nodes[fork.end1] << "," << neg.nodes[fork.end2] << ") at branch ("
           << neg.nodes[fork.branch_node] << "," << neg.results[fork.branch_result]
           << "); path to " << neg.nodes[fork.end1] << ":";
        render_path(fork.path1);
        os << "; path to " << neg.nodes[fork.end2] << ":";
        render_path(fork.path2);
    } else {
        os << "pattern C: circuit without dominating node:";
        render_path(std::get<PatternC>(witness).circuit);
    }
    return os.str();
}

}  // namespace nego
