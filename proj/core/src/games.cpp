#include "nego/games.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>

#include "nego/patterns.hpp"

namespace nego {

GameArena build_arena(const Negotiation& neg, const std::vector<NodeIdx>& b_nodes,
                      const std::vector<std::pair<NodeIdx, ResIdx>>& b_pairs) {
    GameArena arena;
    arena.neg = &neg;
    arena.initial = neg.n_init;
    arena.in_b.assign(neg.node_count(), false);
    for (NodeIdx b : b_nodes) {
        if (b == neg.n_fin)
            throw PreconditionError("n_fin cannot be omitted (conflicting win conditions)");
        arena.in_b.at(b) = true;
    }
    arena.forbidden_out.resize(neg.node_count());
    for (NodeIdx n = 0; n < neg.node_count(); ++n)
        arena.forbidden_out[n].assign(neg.out[n].size(), false);
    for (auto [n, r] : b_pairs) {
        if (n == neg.n_fin && neg.out_pos(n, r) == kInvalidIdx)
            throw PreconditionError("the virtual final step cannot be omitted");
        uint32_t oi = neg.out_pos(n, r);
        if (oi == kInvalidIdx) throw PreconditionError("omitted pair names an unknown result");
        arena.forbidden_out[n][oi] = true;
    }
    return arena;
}

StrategyMax eve_winning(const GameArena& arena) {
    const Negotiation& neg = *arena.neg;
    auto topo_var = topo_order(neg);
    if (!std::holds_alternative<TopoOrder>(topo_var))
        throw PreconditionError("the safety game needs an acyclic negotiation");
    const TopoOrder& topo = std::get<TopoOrder>(topo_var);

    StrategyMax strat;
    strat.winning.assign(neg.node_count(), false);
    strat.sigma.resize(neg.node_count());

    // Backward induction over the topological order: Eve wins at n_fin; at
    // any other node she needs a permitted result whose successors all win.
    for (auto it = topo.order.rbegin(); it != topo.order.rend(); ++it) {
        NodeIdx n = *it;
        if (arena.in_b[n]) continue;
        if (n == neg.n_fin) {
            strat.winning[n] = true;
            // sigma over n_fin's real results, if any, still follows the rule.
        }
        for (uint32_t oi = 0; oi < neg.out[n].size(); ++oi) {
            if (arena.forbidden_out[n][oi]) continue;
            bool all_win = true;
            for (uint32_t di = 0; di < neg.dom[n].size() && all_win; ++di)
                for (NodeIdx t : neg.delta[n][oi][di]) all_win = all_win && strat.winning[t];
            if (all_win) {
                strat.sigma[n].push_back(neg.out[n][oi]);
                strat.winning[n] = true;
            }
        }
    }
    strat.eve_wins_from_initial = strat.winning[arena.initial];
    return strat;
}

OmitSolver::OmitSolver(const Negotiation& neg, uint32_t max_include)
    : neg_(&neg), max_include_(max_include) {
    ClassFlags flags = classify(neg);
    if (!flags.deterministic)
        throw PreconditionError("omitting solver needs a deterministic negotiation");
    if (!flags.acyclic) throw PreconditionError("omitting solver needs an acyclic negotiation");
    auto ds = det_soundness(neg);
    if (!ds.sound) throw PreconditionError("omitting solver needs a sound negotiation");
    topo_ = std::get<TopoOrder>(topo_order(neg));
}

namespace {

// Multi-token search over the strategy graph of sigma_max. Tokens trace
// paths from n_init to their target pairs; the token at the topologically
// smallest position advances (all tokens sharing that position advance
// together with one common result choice). Result choices at P-nodes are
// pinned to the required result.
struct TokenSearch {
    const Negotiation& neg;
    const TopoOrder& topo;
    const StrategyMax& strat;
    const std::vector<std::pair<NodeIdx, ResIdx>>& include;  // targets, distinct nodes

    static constexpr uint32_t kRetired = UINT32_MAX;

    struct State {
        std::vector<uint32_t> pos;  // node per token, kRetired when done
        bool operator<(const State& other) const { return pos < other.pos; }
    };
    struct Arrival {
        State from;
        NodeIdx node;
        ResIdx result;
        bool initial = false;
    };
    std::map<State, Arrival> parents;

    // The pinned result at a node, or the full sigma_max menu.
    std::vector<ResIdx> usable(NodeIdx n) const {
        for (auto [m, a] : include)
            if (m == n) return {a};
        return strat.sigma[n];
    }

    State normalize(State s) const {
        for (size_t i = 0; i < s.pos.size(); ++i)
            if (s.pos[i] != kRetired && s.pos[i] == include[i].first) s.pos[i] = kRetired;
        return s;
    }

    std::optional<State> run() {
        State init;
        init.pos.assign(include.size(), neg.n_init);
        init = normalize(init);
        parents[init] = {State{}, 0, 0, true};
        std::deque<State> queue{init};
        while (!queue.empty()) {
            State state = queue.front();
            queue.pop_front();
            bool done = true;
            NodeIdx y = kInvalidIdx;
            for (uint32_t p : state.pos)
                if (p != kRetired) {
                    done = false;
                    if (y == kInvalidIdx || topo.pos[p] < topo.pos[y]) y = p;
                }
            if (done) return state;
            if (y == neg.n_fin) continue;  // stuck tokens: fin has no continuation

            std::vector<size_t> movers;
            for (size_t i = 0; i < state.pos.size(); ++i)
                if (state.pos[i] == y) movers.push_back(i);

            for (ResIdx r : usable(y)) {
                uint32_t oi = neg.out_pos(y, r);
                // Candidate successors: every process successor of (y, r).
                std::vector<NodeIdx> succs;
                for (uint32_t di = 0; di < neg.dom[y].size(); ++di)
                    succs.push_back(neg.delta[y][oi][di][0]);
                std::sort(succs.begin(), succs.end());
                succs.erase(std::unique(succs.begin(), succs.end()), succs.end());

                // Each mover independently picks a successor.
                std::vector<size_t> choice(movers.size(), 0);
                while (true) {
                    State next = state;
                    for (size_t mi = 0; mi < movers.size(); ++mi)
                        next.pos[movers[mi]] = succs[choice[mi]];
                    next = normalize(next);
                    if (!parents.count(next)) {
                        parents[next] = {state, y, r, false};
                        queue.push_back(next);
                    }
                    size_t k = 0;
                    while (k < choice.size() && ++choice[k] == succs.size()) choice[k++] = 0;
                    if (k == choice.size()) break;
                }
            }
        }
        return std::nullopt;
    }

    // Result choices along the accepting chain, one per advanced node.
    std::vector<std::pair<NodeIdx, ResIdx>> choices(const State& accept) const {
        std::vector<std::pair<NodeIdx, ResIdx>> out;
        State cur = accept;
        while (true) {
            const Arrival& a = parents.at(cur);
            if (a.initial) break;
            out.push_back({a.node, a.result});
            cur = a.from;
        }
        std::reverse(out.begin(), out.end());
        return out;
    }
};

}  // namespace

std::optional<OmitPlan> OmitSolver::solve(const OmitInstance& inst) const {
    const Negotiation& neg = *neg_;

    // Split include pairs into real ones and the always-satisfied virtual
    // final step; reject executable n_fin pairs (no game continuation).
    std::vector<std::pair<NodeIdx, ResIdx>> include;
    for (auto [n, r] : inst.include) {
        if (n == neg.n_fin) {
            if (neg.out_pos(n, r) == kInvalidIdx) continue;  // virtual: always contained
            throw PreconditionError("include pairs on an executable n_fin are not supported");
        }
        if (neg.out_pos(n, r) == kInvalidIdx)
            throw PreconditionError("include pair names an undeclared result");
        include.push_back({n, r});
    }
    std::sort(include.begin(), include.end());
    include.erase(std::unique(include.begin(), include.end()), include.end());
    if (include.size() > max_include_)
        throw PreconditionError("include set larger than the configured K");

    GameArena arena = build_arena(neg, inst.omit_nodes, inst.omit_pairs);

    // Two results of one node can never both occur in a run of an acyclic
    // negotiation.
    for (size_t i = 1; i < include.size(); ++i)
        if (include[i].first == include[i - 1].first) return std::nullopt;
    // Every successful run executes n_init.
    for (NodeIdx b : inst.omit_nodes)
        if (b == neg.n_init) return std::nullopt;
    StrategyMax strat = eve_winning(arena);
    if (!strat.eve_wins_from_initial) return std::nullopt;
    for (auto [m, a] : include) {
        if (!strat.winning[m]) return std::nullopt;
        if (std::find(strat.sigma[m].begin(), strat.sigma[m].end(), a) == strat.sigma[m].end())
            return std::nullopt;
    }

    std::optional<TokenSearch::State> accept;
    std::vector<std::pair<NodeIdx, ResIdx>> pinned_choices;
    if (include.empty()) {
        accept = TokenSearch::State{};  // nothing to route
    } else {
        TokenSearch search{neg, topo_, strat, include, {}};
        accept = search.run();
        if (!accept) return std::nullopt;
        pinned_choices = search.choices(*accept);
    }

    // Assemble the deterministic strategy: pins from the token paths and the
    // include set, any winning result elsewhere.
    std::vector<ResIdx> sigma(neg.node_count(), kInvalidIdx);
    for (auto [n, r] : pinned_choices) sigma[n] = r;
    for (auto [n, r] : include) sigma[n] = r;
    for (NodeIdx n = 0; n < neg.node_count(); ++n)
        if (sigma[n] == kInvalidIdx && strat.winning[n] && !strat.sigma[n].empty())
            sigma[n] = strat.sigma[n][0];

    // Visited set: closure of n_init under the chosen results.
    std::vector<bool> visited(neg.node_count(), false);
    std::deque<NodeIdx> queue{neg.n_init};
    visited[neg.n_init] = true;
    while (!queue.empty()) {
        NodeIdx n = queue.front();
        queue.pop_front();
        if (n == neg.n_fin || sigma[n] == kInvalidIdx) continue;
        uint32_t oi = neg.out_pos(n, sigma[n]);
        for (uint32_t di = 0; di < neg.dom[n].size(); ++di) {
            NodeIdx t = neg.delta[n][oi][di][0];
            if (!visited[t]) {
                visited[t] = true;
                queue.push_back(t);
            }
        }
    }

    OmitPlan plan;
    plan.run.origin = initial_configuration(neg);
    for (NodeIdx n : topo_.order) {
        if (!visited[n] || n == neg.n_fin) continue;
        plan.choices.push_back({n, sigma[n]});
        plan.run.steps.push_back({n, sigma[n]});
    }

    // The ordered execution must replay (Lemma-style extraction).
    replay(neg, plan.run);
    return plan;
}

std::optional<OmitPlan> solve_omitting(const Negotiation& neg, const OmitInstance& inst,
                                       uint32_t max_include) {
    OmitSolver solver(neg, max_include);
    return solver.solve(inst);
}

std::string render_plan(const Negotiation& neg, const OmitPlan& plan) {
    std::ostringstream os;
    os << "choices:";
    for (auto [n, r] : plan.choices)
        os << " " << neg.nodes[n] << "->" << neg.results[r];
    os << "; run: " << render_run(neg, plan.run);
    return os.str();
}

}  // namespace nego
