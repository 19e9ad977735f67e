#include "nego/data.hpp"

#include <algorithm>
#include <sstream>

#include "nego/games.hpp"
#include "nego/graph.hpp"
#include "nego/reach.hpp"

namespace nego {

const char* data_op_name(DataOp op) {
    switch (op) {
        case DataOp::alloc: return "alloc";
        case DataOp::read: return "read";
        case DataOp::write: return "write";
        case DataOp::dealloc: return "dealloc";
    }
    return "?";
}

std::optional<DataOp> data_op_from_name(const std::string& s) {
    if (s == "alloc") return DataOp::alloc;
    if (s == "read") return DataOp::read;
    if (s == "write") return DataOp::write;
    if (s == "dealloc") return DataOp::dealloc;
    return std::nullopt;
}

uint32_t DataNegotiation::var_id(const std::string& name) const {
    for (uint32_t i = 0; i < variables.size(); ++i)
        if (variables[i] == name) return i;
    throw std::out_of_range("unknown variable '" + name + "'");
}

const std::vector<VarOp>* DataNegotiation::label(NodeResult nr) const {
    auto it = labels.find(nr);
    return it == labels.end() ? nullptr : &it->second;
}

DataNegotiation DataNegotiation::wrap(Negotiation neg) {
    DataNegotiation d;
    d.base = std::move(neg);
    if (d.base.fin_terminal_result) {
        d.fin_result_ = *d.base.fin_terminal_result;
        d.synthetic_fin_ = false;
    } else if (d.base.out[d.base.n_fin].empty()) {
        // Synthetic "end" step for spec encodings; not part of the alphabet.
        d.fin_result_ = static_cast<ResIdx>(d.base.results.size());
        d.synthetic_fin_ = true;
    } else {
        // n_fin has real executable results; use the first for "run completes".
        d.fin_result_ = d.base.out[d.base.n_fin][0];
        d.synthetic_fin_ = false;
    }
    return d;
}

// ---- Races ------------------------------------------------------------------

CoOccurrence co_occur(const Negotiation& neg, NodeIdx m, NodeIdx n) {
    ClassFlags flags = classify(neg);
    if (!flags.deterministic)
        throw PreconditionError("co-occurrence test needs a deterministic negotiation");
    if (!det_soundness(neg).sound)
        throw PreconditionError("co-occurrence test needs a sound negotiation");

    CoOccurrence result;
    std::vector<ProcIdx> shared;
    std::set_intersection(neg.dom[m].begin(), neg.dom[m].end(), neg.dom[n].begin(),
                          neg.dom[n].end(), std::back_inserter(shared));
    if (!shared.empty()) {
        // Shared domain: a local path n_init ->* m ->* n (or swapped) decides.
        NegGraph graph(neg);
        auto try_order = [&](NodeIdx first, NodeIdx second) -> bool {
            auto head = local_path(graph, {neg.n_init}, first);
            if (!head) return false;
            auto tail = local_path(graph, {first}, second);
            if (!tail) return false;
            result.via = CoOccurrence::Via::path;
            result.witness_path = *head;
            result.witness_path.insert(result.witness_path.end(), tail->begin(), tail->end());
            return true;
        };
        if (try_order(m, n) || try_order(n, m)) return result;
        return result;
    }
    ForkQuery query;
    query.fix_ends = {{m, n}};
    if (auto fork = find_fork(neg, query)) {
        result.via = CoOccurrence::Via::fork;
        result.fork = fork;
    }
    return result;
}

RaceVerdict race(const Negotiation& neg, NodeIdx m, NodeIdx n) {
    RaceVerdict verdict;
    std::vector<ProcIdx> shared;
    std::set_intersection(neg.dom[m].begin(), neg.dom[m].end(), neg.dom[n].begin(),
                          neg.dom[n].end(), std::back_inserter(shared));
    if (!shared.empty()) {
        verdict.reason = RaceVerdict::Reason::shared_domain;
        return verdict;
    }
    ClassFlags flags = classify(neg);
    if (!flags.deterministic || !flags.acyclic)
        throw PreconditionError(
            "race analysis needs an acyclic deterministic negotiation (use the oracle "
            "otherwise)");
    if (!det_soundness(neg).sound)
        throw PreconditionError("race analysis needs a sound negotiation");

    NegGraph graph(neg);
    auto succ_reach = [&](NodeIdx from) {
        std::vector<NodeIdx> starts;
        for (uint32_t e : graph.out_edges(from)) starts.push_back(graph.edges()[e].to);
        return local_reach(graph, starts);
    };
    auto fwd_m = succ_reach(m);
    if (std::binary_search(fwd_m.begin(), fwd_m.end(), n)) {
        verdict.reason = RaceVerdict::Reason::ordered_by_local_path;
        return verdict;
    }
    auto fwd_n = succ_reach(n);
    if (std::binary_search(fwd_n.begin(), fwd_n.end(), m)) {
        verdict.reason = RaceVerdict::Reason::ordered_by_local_path;
        return verdict;
    }

    CoOccurrence both = co_occur(neg, m, n);
    if (!both.yes()) {
        verdict.reason = RaceVerdict::Reason::never_co_occur;
        return verdict;
    }
    verdict.reason = RaceVerdict::Reason::race;
    verdict.fork = both.fork;
    return verdict;
}

// ---- Data specifications -----------------------------------------------------

namespace {

// (m,a) ->+ target: a local path (possibly empty) from some delta(m,a,p)
// target to the node in question.
std::vector<bool> plus_reach(const Negotiation& neg, const NegGraph& graph, NodeResult from) {
    std::vector<NodeIdx> starts;
    uint32_t oi = neg.out_pos(from.node, from.result);
    if (oi == kInvalidIdx) return std::vector<bool>(neg.node_count(), false);  // virtual
    for (uint32_t di = 0; di < neg.dom[from.node].size(); ++di)
        for (NodeIdx t : neg.delta[from.node][oi][di]) starts.push_back(t);
    std::vector<bool> mask(neg.node_count(), false);
    for (NodeIdx r : local_reach(graph, starts)) mask[r] = true;
    return mask;
}

}  // namespace

SpecVerdict spec_compliance(const DataNegotiation& dneg, const DataSpec& spec) {
    const Negotiation& neg = dneg.base;
    ClassFlags flags = classify(neg);
    if (!flags.deterministic || !flags.acyclic)
        throw PreconditionError(
            "specification compliance needs an acyclic deterministic negotiation");
    OmitSolver solver(neg);  // also checks soundness
    NegGraph graph(neg);

    SpecVerdict verdict;
    for (NodeResult first : spec.o1) {
        if (first.node == neg.n_fin && neg.out_pos(first.node, first.result) == kInvalidIdx)
            continue;  // nothing can follow the virtual final step
        auto from_first = plus_reach(neg, graph, first);
        for (NodeResult second : spec.o2) {
            auto from_second = plus_reach(neg, graph, second);
            if (from_second[first.node]) continue;  // (n,b) ->+ (m,a): never a violation
            // B: O pairs strictly between the two marks.
            OmitInstance inst;
            inst.include = {{first.node, first.result}, {second.node, second.result}};
            for (NodeResult blocker : spec.o) {
                if (blocker == first || blocker == second) continue;
                if (!from_first[blocker.node]) continue;
                auto from_blocker = plus_reach(neg, graph, blocker);
                if (!from_blocker[second.node]) continue;
                inst.omit_pairs.push_back({blocker.node, blocker.result});
            }
            auto plan = solver.solve(inst);
            if (!plan) continue;
            SpecViolation v;
            v.first = first;
            v.second = second;
            v.run = plan->run;
            v.detail = "violates " + spec.name + " at (" + neg.nodes[first.node] + "," +
                       dneg.result_name(first.result) + ") then (" + neg.nodes[second.node] +
                       "," + dneg.result_name(second.result) + ")";
            verdict.violation = std::move(v);
            return verdict;
        }
    }
    return verdict;
}

std::optional<BuiltinSpecKind> builtin_spec_kind_from_name(const std::string& s) {
    if (s == "inconsistent") return BuiltinSpecKind::inconsistent;
    if (s == "weakly-redundant") return BuiltinSpecKind::weakly_redundant;
    if (s == "never-destroyed") return BuiltinSpecKind::never_destroyed;
    return std::nullopt;
}

const char* builtin_spec_kind_name(BuiltinSpecKind kind) {
    switch (kind) {
        case BuiltinSpecKind::inconsistent: return "inconsistent";
        case BuiltinSpecKind::weakly_redundant: return "weakly-redundant";
        case BuiltinSpecKind::never_destroyed: return "never-destroyed";
    }
    return "?";
}

namespace {

// All (node, result) pairs in fixture order, the virtual final step last.
std::vector<NodeResult> all_pairs(const DataNegotiation& dneg) {
    const Negotiation& neg = dneg.base;
    std::vector<NodeResult> pairs;
    for (NodeIdx n = 0; n < neg.node_count(); ++n)
        for (ResIdx r : neg.out[n]) pairs.push_back({n, r});
    if (neg.out[neg.n_fin].empty()) pairs.push_back({neg.n_fin, dneg.fin_result()});
    return pairs;
}

bool has_op(const DataNegotiation& dneg, NodeResult nr, uint32_t x,
            std::initializer_list<DataOp> ops) {
    const auto* label = dneg.label(nr);
    if (!label) return false;
    for (const VarOp& vo : *label)
        if (vo.var == x)
            for (DataOp op : ops)
                if (vo.op == op) return true;
    return false;
}

}  // namespace

DataSpec builtin_spec_triple(const DataNegotiation& dneg, BuiltinSpecKind kind, uint32_t x) {
    if (x >= dneg.variables.size()) throw PreconditionError("unknown variable index");
    const Negotiation& neg = dneg.base;
    DataSpec spec;
    auto pairs = all_pairs(dneg);
    switch (kind) {
        case BuiltinSpecKind::weakly_redundant:
            // Written, then neither read nor deallocated until a dealloc or
            // the run's end.
            spec.name = "weakly-redundant(" + dneg.variables[x] + ")";
            for (NodeResult nr : pairs) {
                if (has_op(dneg, nr, x, {DataOp::write})) spec.o1.push_back(nr);
                if (nr.node == neg.n_fin || has_op(dneg, nr, x, {DataOp::dealloc}))
                    spec.o2.push_back(nr);
                if (has_op(dneg, nr, x, {DataOp::read, DataOp::dealloc})) spec.o.push_back(nr);
            }
            break;
        case BuiltinSpecKind::never_destroyed:
            spec.name = "never-destroyed(" + dneg.variables[x] + ")";
            for (NodeResult nr : pairs) {
                if (has_op(dneg, nr, x, {DataOp::alloc})) spec.o1.push_back(nr);
                if (nr.node == neg.n_fin) spec.o2.push_back(nr);
                if (nr.node == neg.n_fin ||
                    has_op(dneg, nr, x, {DataOp::alloc, DataOp::dealloc}))
                    spec.o.push_back(nr);
            }
            break;
        case BuiltinSpecKind::inconsistent:
            throw PreconditionError("inconsistent-data is race-based, not a triple");
    }
    return spec;
}

BuiltinAnalysis builtin_spec(const DataNegotiation& dneg, BuiltinSpecKind kind, uint32_t x,
                             size_t budget) {
    if (x >= dneg.variables.size()) throw PreconditionError("unknown variable index");
    const Negotiation& neg = dneg.base;
    ClassFlags flags = classify(neg);
    bool fast = flags.deterministic && flags.acyclic;

    BuiltinAnalysis out;
    if (kind == BuiltinSpecKind::inconsistent) {
        auto pairs = all_pairs(dneg);
        std::optional<ReachGraph> graph;
        for (NodeResult ma : pairs) {
            if (!has_op(dneg, ma, x, {DataOp::read, DataOp::write})) continue;
            for (NodeResult nb : pairs) {
                if (!has_op(dneg, nb, x, {DataOp::write, DataOp::alloc, DataOp::dealloc}))
                    continue;
                if (ma.node == nb.node) continue;
                bool concurrent = false;
                if (fast) {
                    try {
                        concurrent = race(neg, ma.node, nb.node).race();
                    } catch (const PreconditionError&) {
                        fast = false;  // e.g. unsound base: fall back to the oracle
                    }
                }
                if (!fast) {
                    if (!graph) graph.emplace(neg, budget);
                    concurrent = oracle_concurrent(*graph, ma.node, nb.node).has_value();
                }
                if (concurrent) {
                    out.holds = true;
                    out.first = ma;
                    out.second = nb;
                    out.method = fast ? "race" : "oracle-concurrent";
                    out.detail = "operations on " + dneg.variables[x] + " at (" +
                                 neg.nodes[ma.node] + "," + dneg.result_name(ma.result) +
                                 ") and (" + neg.nodes[nb.node] + "," +
                                 dneg.result_name(nb.result) + ") can run concurrently";
                    return out;
                }
            }
        }
        out.method = fast ? "race" : "oracle-concurrent";
        return out;
    }

    DataSpec spec = builtin_spec_triple(dneg, kind, x);
    if (fast) {
        try {
            SpecVerdict verdict = spec_compliance(dneg, spec);
            out.method = "omitting";
            if (verdict.violation) {
                out.holds = true;
                out.first = verdict.violation->first;
                out.second = verdict.violation->second;
                out.witness = verdict.violation->run;
                out.detail = verdict.violation->detail;
            }
            return out;
        } catch (const PreconditionError&) {
            // unsound or otherwise outside the fast path; use the oracle
        }
    }
    out.method = "oracle-spec";
    auto witness = oracle_spec(dneg, spec, budget);
    if (witness) {
        out.holds = true;
        out.first = witness->first;
        out.second = witness->second;
        out.witness = witness->run;
        out.detail = "violates " + spec.name + " at (" + neg.nodes[witness->first.node] +
                     "," + dneg.result_name(witness->first.result) + ") then (" +
                     neg.nodes[witness->second.node] + "," +
                     dneg.result_name(witness->second.result) + ")";
    }
    return out;
}

}  // namespace nego
