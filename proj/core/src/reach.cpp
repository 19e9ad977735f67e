#include "nego/reach.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <map>
#include <sstream>
#include <unordered_map>

#include "nego/graph.hpp"

namespace nego {

namespace {

uint64_t hash_cells(const uint32_t* cells, size_t n) {
    uint64_t h = 1469598103934665603ULL;
    for (size_t i = 0; i < n; ++i) {
        h ^= cells[i];
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

// Interns ready sets and configurations; shared by the plain reachability
// construction and the product searches below.
class ReachExplorer {
public:
    explicit ReachExplorer(const Negotiation& neg) : neg_(neg), np_(neg.process_count()) {}

    uint32_t intern_set(const std::vector<NodeIdx>& sorted_set) {
        auto it = set_ids_.find(sorted_set);
        if (it != set_ids_.end()) return it->second;
        uint32_t id = static_cast<uint32_t>(sets_.size());
        sets_.push_back(sorted_set);
        set_ids_.emplace(sorted_set, id);
        return id;
    }

    std::vector<uint32_t> encode(const Configuration& c) {
        std::vector<uint32_t> cells(np_);
        for (ProcIdx p = 0; p < np_; ++p) cells[p] = intern_set(c.ready[p]);
        return cells;
    }

    Configuration decode(const uint32_t* cells) const {
        Configuration c;
        c.ready.resize(np_);
        for (ProcIdx p = 0; p < np_; ++p) c.ready[p] = sets_[cells[p]];
        return c;
    }

    // Returns the index of the configuration, inserting it if new.
    std::pair<uint32_t, bool> intern_config(const uint32_t* cells) {
        uint64_t h = hash_cells(cells, np_);
        auto range = config_ids_.equal_range(h);
        for (auto it = range.first; it != range.second; ++it) {
            const uint32_t* other = cells_.data() + static_cast<size_t>(it->second) * np_;
            if (std::equal(cells, cells + np_, other)) return {it->second, false};
        }
        uint32_t id = static_cast<uint32_t>(count_);
        cells_.insert(cells_.end(), cells, cells + np_);
        config_ids_.emplace(h, id);
        ++count_;
        return {id, true};
    }

    std::vector<NodeIdx> enabled_nodes(const uint32_t* cells) const {
        std::vector<uint32_t> count(neg_.node_count(), 0);
        for (ProcIdx p = 0; p < np_; ++p)
            for (NodeIdx n : sets_[cells[p]])
                if (neg_.in_dom(n, p)) ++count[n];
        std::vector<NodeIdx> out;
        for (NodeIdx n = 0; n < neg_.node_count(); ++n)
            if (count[n] == neg_.dom[n].size()) out.push_back(n);
        return out;
    }

    // Successor cells for executing (n, out-position oi) from cells.
    std::vector<uint32_t> successor(const uint32_t* cells, NodeIdx n, uint32_t oi) {
        std::vector<uint32_t> next(cells, cells + np_);
        for (uint32_t di = 0; di < neg_.dom[n].size(); ++di)
            next[neg_.dom[n][di]] = intern_set(neg_.delta[n][oi][di]);
        return next;
    }

    const Negotiation& neg_;
    size_t np_;
    std::vector<std::vector<NodeIdx>> sets_;
    std::map<std::vector<NodeIdx>, uint32_t> set_ids_;
    std::vector<uint32_t> cells_;  // count_ * np_
    std::unordered_multimap<uint64_t, uint32_t> config_ids_;
    size_t count_ = 0;
};

ReachGraph::ReachGraph(const Negotiation& neg, size_t budget)
    : ReachGraph(neg, initial_configuration(neg), budget) {}

ReachGraph::ReachGraph(const Negotiation& neg, const Configuration& origin, size_t budget)
    : neg_(&neg), origin_(origin) {
    check_configuration(neg, origin);
    ReachExplorer ex(neg);
    auto cells0 = ex.encode(origin);
    ex.intern_config(cells0.data());
    parent_edge_.push_back(kInvalidIdx);

    first_edge_.push_back(0);
    for (uint32_t idx = 0; idx < ex.count_; ++idx) {
        if (ex.count_ > budget)
            throw BudgetExceeded("reachability graph exceeds configuration budget");
        std::vector<uint32_t> cells(ex.cells_.begin() + static_cast<size_t>(idx) * ex.np_,
                                    ex.cells_.begin() + static_cast<size_t>(idx + 1) * ex.np_);
        auto en = ex.enabled_nodes(cells.data());
        terminal_.push_back(std::binary_search(en.begin(), en.end(), neg.n_fin));
        deadlock_.push_back(en.empty());
        if (terminal_.back()) terminal_list_.push_back(idx);
        for (NodeIdx n : en)
            for (uint32_t oi = 0; oi < neg.out[n].size(); ++oi) {
                auto next = ex.successor(cells.data(), n, oi);
                auto [tid, fresh] = ex.intern_config(next.data());
                if (fresh) parent_edge_.push_back(static_cast<uint32_t>(edges_.size()));
                if (ex.count_ > budget)
                    throw BudgetExceeded("reachability graph exceeds configuration budget");
                edges_.push_back({idx, n, neg.out[n][oi], tid});
            }
        first_edge_.push_back(static_cast<uint32_t>(edges_.size()));
    }
    config_cells_ = std::move(ex.cells_);
    set_pool_ = std::move(ex.sets_);
}

Configuration ReachGraph::configuration(uint32_t idx) const {
    Configuration c;
    size_t np = neg_->process_count();
    c.ready.resize(np);
    for (ProcIdx p = 0; p < np; ++p)
        c.ready[p] = set_pool_[config_cells_[static_cast<size_t>(idx) * np + p]];
    return c;
}

Run ReachGraph::run_to(uint32_t idx) const {
    Run run;
    run.origin = origin_;
    std::vector<Step> rev;
    uint32_t cur = idx;
    while (parent_edge_[cur] != kInvalidIdx) {
        const Edge& e = edges_[parent_edge_[cur]];
        rev.push_back({e.node, e.result});
        cur = e.from;
    }
    run.steps.assign(rev.rbegin(), rev.rend());
    return run;
}

std::string ReachGraph::dot() const {
    std::ostringstream os;
    os << "digraph reach {\n";
    for (uint32_t i = 0; i < size(); ++i) {
        os << "  c" << i << " [label=\"" << render_configuration(*neg_, configuration(i))
           << "\"";
        if (terminal_[i]) os << ", peripheries=2";
        if (deadlock_[i]) os << ", color=red";
        os << "];\n";
    }
    for (const Edge& e : edges_)
        os << "  c" << e.from << " -> c" << e.to << " [label=\"" << neg_->nodes[e.node]
           << "/" << neg_->results[e.result] << "\"];\n";
    os << "}\n";
    return os.str();
}

SoundnessVerdict oracle_sound(const ReachGraph& graph) {
    size_t n = graph.size();
    // Backward reachability from terminal configurations.
    std::vector<std::vector<uint32_t>> preds(n);
    for (const auto& e : graph.edges()) preds[e.to].push_back(e.from);
    std::vector<bool> coreach(n, false);
    std::vector<uint32_t> queue;
    for (uint32_t t : graph.terminals()) {
        coreach[t] = true;
        queue.push_back(t);
    }
    for (size_t i = 0; i < queue.size(); ++i)
        for (uint32_t p : preds[queue[i]])
            if (!coreach[p]) {
                coreach[p] = true;
                queue.push_back(p);
            }
    for (uint32_t i = 0; i < n; ++i)
        if (!coreach[i]) return {false, graph.run_to(i)};
    return {true, std::nullopt};
}

SoundnessVerdict oracle_sound(const Negotiation& neg, size_t budget) {
    return oracle_sound(ReachGraph(neg, budget));
}

namespace {

// True for pairs that name the virtual terminal step of n_fin (a result of
// n_fin that is not executable).
bool is_virtual_fin_pair(const Negotiation& neg, NodeResult nr) {
    return nr.node == neg.n_fin && neg.out_pos(nr.node, nr.result) == kInvalidIdx;
}

}  // namespace

std::optional<Run> oracle_omit(const Negotiation& neg, const OmitQuery& query, size_t budget) {
    std::vector<NodeResult> include;
    for (NodeResult nr : query.include) {
        if (is_virtual_fin_pair(neg, nr)) continue;  // every successful run has it
        include.push_back(nr);
    }
    for (NodeResult nr : query.omit_pairs)
        if (is_virtual_fin_pair(neg, nr)) return std::nullopt;
    if (include.size() > 20) throw PreconditionError("include set too large for the oracle");

    std::vector<bool> omit_node(neg.node_count(), false);
    for (NodeIdx b : query.omit_nodes) omit_node.at(b) = true;

    uint32_t full = (1u << include.size()) - 1;

    ReachExplorer ex(neg);
    auto cells0 = ex.encode(initial_configuration(neg));
    size_t np = ex.np_;

    // State = configuration cells + satisfied mask, interned together.
    struct Parent {
        uint32_t state;
        Step step;
    };
    std::vector<uint32_t> state_cells;
    std::unordered_multimap<uint64_t, uint32_t> state_ids;
    std::vector<Parent> parents;
    size_t stride = np + 1;

    auto intern_state = [&](const uint32_t* cells, uint32_t mask) -> std::pair<uint32_t, bool> {
        std::vector<uint32_t> key(cells, cells + np);
        key.push_back(mask);
        uint64_t h = hash_cells(key.data(), stride);
        auto range = state_ids.equal_range(h);
        for (auto it = range.first; it != range.second; ++it) {
            const uint32_t* other = state_cells.data() + static_cast<size_t>(it->second) * stride;
            if (std::equal(key.begin(), key.end(), other)) return {it->second, false};
        }
        uint32_t id = static_cast<uint32_t>(state_cells.size() / stride);
        state_cells.insert(state_cells.end(), key.begin(), key.end());
        state_ids.emplace(h, id);
        return {id, true};
    };

    intern_state(cells0.data(), 0);
    parents.push_back({kInvalidIdx, {0, 0}});

    auto build_run = [&](uint32_t state) {
        Run run;
        run.origin = initial_configuration(neg);
        std::vector<Step> rev;
        for (uint32_t cur = state; parents[cur].state != kInvalidIdx; cur = parents[cur].state)
            rev.push_back(parents[cur].step);
        run.steps.assign(rev.rbegin(), rev.rend());
        return run;
    };

    for (uint32_t idx = 0; static_cast<size_t>(idx) < state_cells.size() / stride; ++idx) {
        if (state_cells.size() / stride > budget)
            throw BudgetExceeded("omitting search exceeds state budget");
        std::vector<uint32_t> cells(state_cells.begin() + static_cast<size_t>(idx) * stride,
                                    state_cells.begin() + static_cast<size_t>(idx) * stride + np);
        uint32_t mask = state_cells[static_cast<size_t>(idx) * stride + np];
        auto en = ex.enabled_nodes(cells.data());
        bool terminal = std::binary_search(en.begin(), en.end(), neg.n_fin);
        if (terminal && mask == full) return build_run(idx);
        for (NodeIdx n : en) {
            if (omit_node[n]) continue;
            for (uint32_t oi = 0; oi < neg.out[n].size(); ++oi) {
                ResIdx r = neg.out[n][oi];
                bool omitted_pair = false;
                for (NodeResult nr : query.omit_pairs)
                    omitted_pair = omitted_pair || (nr.node == n && nr.result == r);
                if (omitted_pair) continue;
                uint32_t next_mask = mask;
                for (uint32_t bi = 0; bi < include.size(); ++bi)
                    if (include[bi].node == n && include[bi].result == r) next_mask |= 1u << bi;
                auto next = ex.successor(cells.data(), n, oi);
                auto [sid, fresh] = intern_state(next.data(), next_mask);
                if (fresh) parents.push_back({idx, {n, r}});
            }
        }
    }
    return std::nullopt;
}

std::optional<Configuration> oracle_concurrent(const ReachGraph& graph, NodeIdx m, NodeIdx n) {
    const Negotiation& neg = graph.negotiation();
    std::vector<ProcIdx> shared;
    std::set_intersection(neg.dom[m].begin(), neg.dom[m].end(), neg.dom[n].begin(),
                          neg.dom[n].end(), std::back_inserter(shared));
    if (!shared.empty()) return std::nullopt;
    for (uint32_t i = 0; i < graph.size(); ++i) {
        Configuration c = graph.configuration(i);
        if (is_enabled(neg, c, m) && is_enabled(neg, c, n)) return c;
    }
    return std::nullopt;
}

std::optional<Configuration> oracle_concurrent(const Negotiation& neg, NodeIdx m, NodeIdx n,
                                               size_t budget) {
    std::vector<ProcIdx> shared;
    std::set_intersection(neg.dom[m].begin(), neg.dom[m].end(), neg.dom[n].begin(),
                          neg.dom[n].end(), std::back_inserter(shared));
    if (!shared.empty()) return std::nullopt;
    return oracle_concurrent(ReachGraph(neg, budget), m, n);
}

namespace {

// Per-configuration shortest continuation to some terminal configuration:
// completion[c] = edge index to follow from c, kInvalidIdx at terminals or
// doomed configurations.
struct CompletionTree {
    std::vector<bool> coreach;
    std::vector<uint32_t> via_edge;

    explicit CompletionTree(const ReachGraph& graph)
        : coreach(graph.size(), false), via_edge(graph.size(), kInvalidIdx) {
        std::vector<std::vector<uint32_t>> pred_edges(graph.size());
        for (uint32_t ei = 0; ei < graph.edges().size(); ++ei)
            pred_edges[graph.edges()[ei].to].push_back(ei);
        std::deque<uint32_t> queue;
        for (uint32_t t : graph.terminals()) {
            coreach[t] = true;
            queue.push_back(t);
        }
        while (!queue.empty()) {
            uint32_t c = queue.front();
            queue.pop_front();
            for (uint32_t ei : pred_edges[c]) {
                uint32_t p = graph.edges()[ei].from;
                if (coreach[p]) continue;
                coreach[p] = true;
                via_edge[p] = ei;
                queue.push_back(p);
            }
        }
    }

    void append_completion(const ReachGraph& graph, uint32_t from, std::vector<Step>& steps) const {
        uint32_t cur = from;
        while (via_edge[cur] != kInvalidIdx) {
            const auto& e = graph.edges()[via_edge[cur]];
            steps.push_back({e.node, e.result});
            cur = e.to;
        }
    }
};

// Violation search for one (o1, o2) pair over the reachability graph:
// phase 0 = searching for the o1 step, phase 1 = o1 seen, no O step since.
std::optional<SpecWitness> spec_pair_search(const ReachGraph& graph, const CompletionTree& tree,
                                            NodeResult o1, NodeResult o2,
                                            const std::vector<NodeResult>& o_set) {
    const Negotiation& neg = graph.negotiation();
    auto in_o = [&](NodeIdx n, ResIdx r) {
        for (NodeResult nr : o_set)
            if (nr.node == n && nr.result == r) return true;
        return false;
    };
    bool o1_virtual = o1.node == neg.n_fin && neg.out_pos(o1.node, o1.result) == kInvalidIdx;
    if (o1_virtual) return std::nullopt;  // nothing can follow the final virtual step
    bool o2_virtual = o2.node == neg.n_fin && neg.out_pos(o2.node, o2.result) == kInvalidIdx;

    size_t n_states = graph.size() * 2;
    std::vector<uint32_t> parent_state(n_states, kInvalidIdx);
    std::vector<uint32_t> parent_edge(n_states, kInvalidIdx);
    std::vector<bool> seen(n_states, false);
    auto id = [&](uint32_t cfg, int phase) { return cfg * 2u + static_cast<uint32_t>(phase); };

    std::deque<uint32_t> queue;
    seen[id(graph.initial(), 0)] = true;
    queue.push_back(id(graph.initial(), 0));

    // Rebuilds the marked run: prefix from the product BFS tree, optional
    // accepting edge, then the shortest completion to a terminal.
    auto build = [&](uint32_t accept_state, uint32_t accept_edge) {
        std::vector<std::pair<uint32_t, uint32_t>> chain;  // (state, incoming edge)
        for (uint32_t cur = accept_state; cur != kInvalidIdx; cur = parent_state[cur])
            chain.push_back({cur, parent_edge[cur]});
        std::reverse(chain.begin(), chain.end());

        Run run;
        run.origin = initial_configuration(neg);
        size_t first_index = SIZE_MAX;
        for (size_t i = 1; i < chain.size(); ++i) {
            const auto& e = graph.edges()[chain[i].second];
            run.steps.push_back({e.node, e.result});
            if (chain[i].first % 2 == 1 && chain[i - 1].first % 2 == 0)
                first_index = run.steps.size() - 1;
        }
        SpecWitness w;
        w.first = o1;
        w.second = o2;
        w.first_index = first_index;
        if (accept_edge != kInvalidIdx) {
            const auto& e = graph.edges()[accept_edge];
            run.steps.push_back({e.node, e.result});
            w.second_index = run.steps.size() - 1;
            tree.append_completion(graph, e.to, run.steps);
        } else {
            w.second_index = run.steps.size();  // the virtual final step
        }
        w.run = std::move(run);
        return w;
    };

    while (!queue.empty()) {
        uint32_t state = queue.front();
        queue.pop_front();
        uint32_t cfg = state / 2;
        int phase = static_cast<int>(state % 2);

        if (phase == 1 && o2_virtual && graph.terminal(cfg)) return build(state, kInvalidIdx);

        auto [e_begin, e_end] = graph.edge_range(cfg);
        for (uint32_t ei = e_begin; ei < e_end; ++ei) {
            const auto& e = graph.edges()[ei];
            if (phase == 1 && !o2_virtual && e.node == o2.node && e.result == o2.result &&
                tree.coreach[e.to])
                return build(state, ei);
            int moves[2] = {-1, -1};
            if (phase == 0) {
                moves[0] = 0;
                if (e.node == o1.node && e.result == o1.result) moves[1] = 1;
            } else if (!in_o(e.node, e.result)) {
                moves[0] = 1;
            }
            for (int next_phase : moves) {
                if (next_phase < 0) continue;
                uint32_t next = id(e.to, next_phase);
                if (seen[next]) continue;
                seen[next] = true;
                parent_state[next] = state;
                parent_edge[next] = ei;
                queue.push_back(next);
            }
        }
    }
    return std::nullopt;
}

}  // namespace

std::optional<SpecWitness> oracle_spec(const DataNegotiation& dneg, const DataSpec& spec,
                                       size_t budget) {
    ReachGraph graph(dneg.base, budget);
    CompletionTree tree(graph);
    for (NodeResult o1 : spec.o1)
        for (NodeResult o2 : spec.o2)
            if (auto w = spec_pair_search(graph, tree, o1, o2, spec.o)) return w;
    return std::nullopt;
}

Run realize_path(const Negotiation& neg, const std::vector<NegEdge>& path,
                 const Configuration& c, size_t budget) {
    check_configuration(neg, c);
    if (path.empty()) return Run{c, {}};
    for (size_t i = 0; i + 1 < path.size(); ++i)
        if (path[i].to != path[i + 1].from)
            throw PreconditionError("path edges do not chain");
    if (!is_enabled(neg, c, path[0].from))
        throw PreconditionError("path's first node is not enabled in the configuration");

    Run run;
    run.origin = c;
    Configuration cur = c;
    size_t used = 0;
    for (size_t i = 0; i < path.size(); ++i) {
        run.steps.push_back({path[i].from, path[i].result});
        cur = step(neg, cur, path[i].from, path[i].result);
        if (i + 1 == path.size()) break;

        // Interleave toward enabling the next path node without touching the
        // pinned process of the edge just realized.
        ProcIdx pinned = path[i].process;
        NodeIdx target = path[i + 1].from;
        if (is_enabled(neg, cur, target)) continue;

        ReachExplorer ex(neg);
        auto cells0 = ex.encode(cur);
        ex.intern_config(cells0.data());
        std::vector<std::pair<uint32_t, Step>> parent{{kInvalidIdx, {0, 0}}};
        std::optional<uint32_t> found;
        for (uint32_t idx = 0; static_cast<size_t>(idx) < ex.count_ && !found; ++idx) {
            if (++used > budget) throw BudgetExceeded("path realization exceeds budget");
            std::vector<uint32_t> cells(ex.cells_.begin() + static_cast<size_t>(idx) * ex.np_,
                                        ex.cells_.begin() + static_cast<size_t>(idx + 1) * ex.np_);
            for (NodeIdx n : ex.enabled_nodes(cells.data())) {
                if (neg.in_dom(n, pinned)) continue;
                for (uint32_t oi = 0; oi < neg.out[n].size() && !found; ++oi) {
                    auto next = ex.successor(cells.data(), n, oi);
                    auto [sid, fresh] = ex.intern_config(next.data());
                    if (!fresh) continue;
                    parent.push_back({idx, {n, neg.out[n][oi]}});
                    auto en = ex.enabled_nodes(next.data());
                    if (std::binary_search(en.begin(), en.end(), target)) found = sid;
                }
            }
        }
        if (!found)
            throw PreconditionError(
                "path not realizable within budget (is the negotiation sound?)");
        std::vector<Step> rev;
        for (uint32_t s = *found; parent[s].first != kInvalidIdx; s = parent[s].first)
            rev.push_back(parent[s].second);
        for (auto it = rev.rbegin(); it != rev.rend(); ++it) {
            run.steps.push_back(*it);
            cur = step(neg, cur, it->node, it->result);
        }
    }
    return run;
}

Run reorder_topologically(const Negotiation& neg, const Run& run) {
    replay(neg, run);  // throws on invalid input
    auto topo = topo_order(neg);
    if (std::holds_alternative<CycleError>(topo))
        throw PreconditionError("reordering needs an acyclic negotiation");
    const TopoOrder& order = std::get<TopoOrder>(topo);

    Run out = run;
    bool swapped = true;
    while (swapped) {
        swapped = false;
        for (size_t k = 0; k + 1 < out.steps.size(); ++k) {
            NodeIdx a = out.steps[k].node, b = out.steps[k + 1].node;
            if (order.pos[b] >= order.pos[a]) continue;
            std::vector<ProcIdx> shared;
            std::set_intersection(neg.dom[a].begin(), neg.dom[a].end(), neg.dom[b].begin(),
                                  neg.dom[b].end(), std::back_inserter(shared));
            if (!shared.empty())
                throw std::logic_error("adjacent inversion with overlapping domains");
            std::swap(out.steps[k], out.steps[k + 1]);
            swapped = true;
        }
    }
    replay(neg, out);
    return out;
}

}  // namespace nego
