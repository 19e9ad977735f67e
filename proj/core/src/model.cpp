#include "nego/model.hpp"

#include <algorithm>
#include <sstream>

namespace nego {

namespace {

bool contains(const std::vector<uint32_t>& sorted, uint32_t x) {
    return std::binary_search(sorted.begin(), sorted.end(), x);
}

std::vector<uint32_t> sorted_unique(std::vector<uint32_t> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}  // namespace

bool Negotiation::in_dom(NodeIdx n, ProcIdx p) const { return contains(dom[n], p); }

bool Negotiation::has_result(NodeIdx n, ResIdx r) const {
    return out_pos(n, r) != kInvalidIdx;
}

uint32_t Negotiation::out_pos(NodeIdx n, ResIdx r) const {
    const auto& rs = out[n];
    for (uint32_t i = 0; i < rs.size(); ++i)
        if (rs[i] == r) return i;
    return kInvalidIdx;
}

uint32_t Negotiation::dom_pos(NodeIdx n, ProcIdx p) const {
    const auto& ps = dom[n];
    auto it = std::lower_bound(ps.begin(), ps.end(), p);
    if (it != ps.end() && *it == p) return static_cast<uint32_t>(it - ps.begin());
    return kInvalidIdx;
}

const std::vector<NodeIdx>& Negotiation::targets(NodeIdx n, ResIdx r, ProcIdx p) const {
    uint32_t oi = out_pos(n, r);
    uint32_t di = dom_pos(n, p);
    if (oi == kInvalidIdx || di == kInvalidIdx)
        throw std::out_of_range("delta undefined for requested (node, result, process)");
    return delta[n][oi][di];
}

NodeIdx Negotiation::node_id(const std::string& s) const { return node_by_name_.at(s); }
ProcIdx Negotiation::proc_id(const std::string& s) const { return proc_by_name_.at(s); }
ResIdx Negotiation::result_id(const std::string& s) const { return result_by_name_.at(s); }

bool Negotiation::operator==(const Negotiation& other) const {
    return processes == other.processes && nodes == other.nodes &&
           results == other.results && n_init == other.n_init && n_fin == other.n_fin &&
           dom == other.dom && out == other.out && delta == other.delta &&
           fin_terminal_result == other.fin_terminal_result;
}

ValidateResult validate(const RawNegotiation& raw) {
    ValidateResult res;
    auto fail = [&](const std::string& msg) { res.errors.push_back(msg); };

    Negotiation neg;
    neg.name = raw.name;

    for (const auto& p : raw.processes) {
        if (neg.proc_by_name_.count(p)) {
            fail("duplicate process '" + p + "'");
            continue;
        }
        neg.proc_by_name_[p] = static_cast<ProcIdx>(neg.processes.size());
        neg.processes.push_back(p);
    }
    if (neg.processes.empty()) fail("no processes declared");

    for (const auto& n : raw.nodes) {
        if (neg.node_by_name_.count(n.id)) {
            fail("duplicate node '" + n.id + "'");
            continue;
        }
        neg.node_by_name_[n.id] = static_cast<NodeIdx>(neg.nodes.size());
        neg.nodes.push_back(n.id);
    }
    if (!res.errors.empty()) return res;

    size_t nn = neg.nodes.size();
    neg.dom.resize(nn);
    neg.out.resize(nn);
    neg.delta.resize(nn);

    for (const auto& n : raw.nodes) {
        NodeIdx idx = neg.node_by_name_[n.id];
        std::vector<ProcIdx> d;
        for (const auto& p : n.domain) {
            auto it = neg.proc_by_name_.find(p);
            if (it == neg.proc_by_name_.end()) {
                fail("node '" + n.id + "': unknown process '" + p + "'");
                continue;
            }
            d.push_back(it->second);
        }
        neg.dom[idx] = sorted_unique(std::move(d));
        if (neg.dom[idx].empty()) fail("node '" + n.id + "' has empty domain");
    }

    auto resolve_node = [&](const std::string& id, const char* what) -> NodeIdx {
        auto it = neg.node_by_name_.find(id);
        if (it == neg.node_by_name_.end()) {
            fail(std::string(what) + ": unknown node '" + id + "'");
            return kInvalidIdx;
        }
        return it->second;
    };

    neg.n_init = resolve_node(raw.init, "init");
    neg.n_fin = resolve_node(raw.fin, "fin");
    if (neg.n_init == kInvalidIdx || neg.n_fin == kInvalidIdx) return res;

    if (neg.dom[neg.n_init].size() != neg.processes.size())
        fail("init domain incomplete: dom(" + raw.init + ") must contain every process");
    if (neg.dom[neg.n_fin].size() != neg.processes.size())
        fail("fin domain incomplete: dom(" + raw.fin + ") must contain every process");

    auto intern_result = [&](const std::string& r) -> ResIdx {
        auto it = neg.result_by_name_.find(r);
        if (it != neg.result_by_name_.end()) return it->second;
        ResIdx idx = static_cast<ResIdx>(neg.results.size());
        neg.result_by_name_[r] = idx;
        neg.results.push_back(r);
        return idx;
    };

    std::vector<bool> out_seen(nn, false);
    for (const auto& o : raw.outs) {
        NodeIdx n = resolve_node(o.node, "out");
        if (n == kInvalidIdx) continue;
        if (out_seen[n]) {
            fail("duplicate out line for node '" + o.node + "'");
            continue;
        }
        out_seen[n] = true;
        for (const auto& r : o.results) {
            ResIdx ri = intern_result(r);
            if (neg.out_pos(n, ri) != kInvalidIdx) {
                fail("node '" + o.node + "': duplicate result '" + r + "'");
                continue;
            }
            neg.out[n].push_back(ri);
        }
    }

    for (NodeIdx n = 0; n < nn; ++n) {
        if (neg.out[n].empty() && n != neg.n_fin)
            fail("node '" + neg.nodes[n] + "' has no results (only fin may)");
        neg.delta[n].assign(neg.out[n].size(),
                            std::vector<std::vector<NodeIdx>>(neg.dom[n].size()));
    }
    if (!res.errors.empty()) return res;

    for (const auto& a : raw.arcs) {
        NodeIdx n = resolve_node(a.node, "arc");
        if (n == kInvalidIdx) continue;
        auto rit = neg.result_by_name_.find(a.result);
        if (rit == neg.result_by_name_.end() || neg.out_pos(n, rit->second) == kInvalidIdx) {
            fail("arc on '" + a.node + "': result '" + a.result + "' not in out(" + a.node + ")");
            continue;
        }
        auto pit = neg.proc_by_name_.find(a.process);
        if (pit == neg.proc_by_name_.end()) {
            fail("arc on '" + a.node + "': unknown process '" + a.process + "'");
            continue;
        }
        uint32_t oi = neg.out_pos(n, rit->second);
        uint32_t di = neg.dom_pos(n, pit->second);
        if (di == kInvalidIdx) {
            fail("arc on '" + a.node + "': process '" + a.process + "' not in dom(" + a.node + ")");
            continue;
        }
        if (!neg.delta[n][oi][di].empty()) {
            fail("duplicate arc line for (" + a.node + "," + a.result + "," + a.process + ")");
            continue;
        }
        std::vector<NodeIdx> tgts;
        for (const auto& t : a.targets) {
            NodeIdx ti = resolve_node(t, "arc target");
            if (ti == kInvalidIdx) continue;
            if (!neg.in_dom(ti, pit->second)) {
                fail("arc (" + a.node + "," + a.result + "," + a.process + "): target '" + t +
                     "' does not have " + a.process + " in its domain");
                continue;
            }
            tgts.push_back(ti);
        }
        if (tgts.empty()) {
            fail("arc (" + a.node + "," + a.result + "," + a.process + ") has no valid targets");
            continue;
        }
        neg.delta[n][oi][di] = sorted_unique(std::move(tgts));
    }

    // Every (node, result, process) entry must be covered. A single undefined
    // result on n_fin is kept aside as the virtual terminal result.
    std::optional<ResIdx> terminal;
    for (NodeIdx n = 0; n < nn; ++n) {
        std::vector<uint32_t> undefined_results;
        for (uint32_t oi = 0; oi < neg.out[n].size(); ++oi) {
            bool any = false, all = true;
            for (uint32_t di = 0; di < neg.dom[n].size(); ++di) {
                if (neg.delta[n][oi][di].empty()) all = false; else any = true;
            }
            if (all) continue;
            if (!any && n == neg.n_fin) {
                undefined_results.push_back(oi);
                continue;
            }
            for (uint32_t di = 0; di < neg.dom[n].size(); ++di)
                if (neg.delta[n][oi][di].empty())
                    fail("delta undefined for (" + neg.nodes[n] + "," +
                         neg.results[neg.out[n][oi]] + "," +
                         neg.processes[neg.dom[n][di]] + ")");
        }
        if (undefined_results.size() > 1)
            fail("fin node '" + neg.nodes[n] + "' has more than one arc-less result");
        else if (undefined_results.size() == 1) {
            terminal = neg.out[n][undefined_results[0]];
            uint32_t oi = undefined_results[0];
            neg.out[n].erase(neg.out[n].begin() + oi);
            neg.delta[n].erase(neg.delta[n].begin() + oi);
        }
    }
    neg.fin_terminal_result = terminal;

    if (!res.errors.empty()) return res;
    res.negotiation = std::move(neg);
    return res;
}

Configuration initial_configuration(const Negotiation& neg) {
    Configuration c;
    c.ready.assign(neg.process_count(), {neg.n_init});
    return c;
}

Configuration final_configuration(const Negotiation& neg) {
    Configuration c;
    c.ready.assign(neg.process_count(), {neg.n_fin});
    return c;
}

void check_configuration(const Negotiation& neg, const Configuration& c) {
    if (c.ready.size() != neg.process_count())
        throw NegotiationError(NegotiationError::Kind::bad_configuration,
                               "configuration does not cover every process");
    for (ProcIdx p = 0; p < c.ready.size(); ++p) {
        if (c.ready[p].empty())
            throw NegotiationError(NegotiationError::Kind::bad_configuration,
                                   "empty ready set for process " + neg.processes[p]);
        for (NodeIdx n : c.ready[p])
            if (n >= neg.node_count() || !neg.in_dom(n, p))
                throw NegotiationError(NegotiationError::Kind::bad_configuration,
                                       "process " + neg.processes[p] +
                                           " ready for a node outside its domains");
    }
}

bool is_enabled(const Negotiation& neg, const Configuration& c, NodeIdx n) {
    for (ProcIdx p : neg.dom[n])
        if (!contains(c.ready[p], n)) return false;
    return true;
}

std::vector<NodeIdx> enabled(const Negotiation& neg, const Configuration& c) {
    std::vector<uint32_t> count(neg.node_count(), 0);
    for (ProcIdx p = 0; p < c.ready.size(); ++p)
        for (NodeIdx n : c.ready[p])
            if (neg.in_dom(n, p)) ++count[n];
    std::vector<NodeIdx> result;
    for (NodeIdx n = 0; n < neg.node_count(); ++n)
        if (count[n] == neg.dom[n].size()) result.push_back(n);
    return result;
}

bool is_terminal(const Negotiation& neg, const Configuration& c) {
    return is_enabled(neg, c, neg.n_fin);
}

bool is_deadlock(const Negotiation& neg, const Configuration& c) {
    return enabled(neg, c).empty();
}

Configuration step(const Negotiation& neg, const Configuration& c, NodeIdx n, ResIdx a) {
    uint32_t oi = neg.out_pos(n, a);
    if (oi == kInvalidIdx) {
        if (n == neg.n_fin && neg.out[n].empty())
            throw NegotiationError(NegotiationError::Kind::fin_not_executable,
                                   "final node has no results and cannot be executed");
        throw NegotiationError(NegotiationError::Kind::unknown_result,
                               "result not in out(" + neg.nodes[n] + ")");
    }
    if (!is_enabled(neg, c, n))
        throw NegotiationError(NegotiationError::Kind::not_enabled,
                               "node " + neg.nodes[n] + " is not enabled");
    Configuration next = c;
    for (uint32_t di = 0; di < neg.dom[n].size(); ++di)
        next.ready[neg.dom[n][di]] = neg.delta[n][oi][di];
    return next;
}

std::vector<Configuration> replay(const Negotiation& neg, const Run& run) {
    check_configuration(neg, run.origin);
    std::vector<Configuration> trace{run.origin};
    for (const Step& s : run.steps)
        trace.push_back(step(neg, trace.back(), s.node, s.result));
    return trace;
}

bool is_process_deterministic(const Negotiation& neg, ProcIdx p) {
    for (NodeIdx n = 0; n < neg.node_count(); ++n) {
        uint32_t di = neg.dom_pos(n, p);
        if (di == kInvalidIdx) continue;
        for (uint32_t oi = 0; oi < neg.out[n].size(); ++oi)
            if (neg.delta[n][oi][di].size() != 1) return false;
    }
    return true;
}

std::vector<ProcIdx> deterministic_processes(const Negotiation& neg) {
    std::vector<ProcIdx> ds;
    for (ProcIdx p = 0; p < neg.process_count(); ++p)
        if (is_process_deterministic(neg, p)) ds.push_back(p);
    return ds;
}

namespace {

// Cycle check; proc_mask, when given, keeps only edges carried by masked processes.
bool has_cycle(const Negotiation& neg, const std::vector<bool>* proc_mask) {
    size_t nn = neg.node_count();
    std::vector<std::vector<NodeIdx>> succ(nn);
    for (NodeIdx n = 0; n < nn; ++n)
        for (uint32_t oi = 0; oi < neg.out[n].size(); ++oi)
            for (uint32_t di = 0; di < neg.dom[n].size(); ++di) {
                if (proc_mask && !(*proc_mask)[neg.dom[n][di]]) continue;
                for (NodeIdx t : neg.delta[n][oi][di]) succ[n].push_back(t);
            }
    std::vector<int> color(nn, 0);
    std::vector<std::pair<NodeIdx, size_t>> stack;
    for (NodeIdx start = 0; start < nn; ++start) {
        if (color[start] != 0) continue;
        stack.push_back({start, 0});
        color[start] = 1;
        while (!stack.empty()) {
            auto& [n, i] = stack.back();
            if (i < succ[n].size()) {
                NodeIdx t = succ[n][i++];
                if (color[t] == 1) return true;
                if (color[t] == 0) {
                    color[t] = 1;
                    stack.push_back({t, 0});
                }
            } else {
                color[n] = 2;
                stack.pop_back();
            }
        }
    }
    return false;
}

}  // namespace

ClassFlags classify(const Negotiation& neg) {
    ClassFlags f;

    std::vector<bool> det(neg.process_count());
    bool all_det = true;
    for (ProcIdx p = 0; p < neg.process_count(); ++p) {
        det[p] = is_process_deterministic(neg, p);
        all_det = all_det && det[p];
    }
    f.deterministic = all_det;

    f.weakly_nd = true;
    for (NodeIdx n = 0; n < neg.node_count() && f.weakly_nd; ++n) {
        bool any = false;
        for (ProcIdx p : neg.dom[n]) any = any || det[p];
        f.weakly_nd = any;
    }

    f.very_weakly_nd = true;
    for (NodeIdx n = 0; n < neg.node_count() && f.very_weakly_nd; ++n)
        for (uint32_t oi = 0; oi < neg.out[n].size() && f.very_weakly_nd; ++oi)
            for (uint32_t di = 0; di < neg.dom[n].size() && f.very_weakly_nd; ++di) {
                const auto& tgts = neg.delta[n][oi][di];
                bool resolved = false;
                for (ProcIdx q = 0; q < neg.process_count() && !resolved; ++q) {
                    if (!det[q]) continue;
                    bool in_all = true;
                    for (NodeIdx t : tgts) in_all = in_all && neg.in_dom(t, q);
                    resolved = in_all;
                }
                f.very_weakly_nd = resolved;
            }

    f.acyclic = !has_cycle(neg, nullptr);
    f.det_acyclic = f.acyclic || !has_cycle(neg, &det);

    // Plain reachability from n_init over all labels.
    std::vector<bool> seen(neg.node_count(), false);
    std::vector<NodeIdx> queue{neg.n_init};
    seen[neg.n_init] = true;
    while (!queue.empty()) {
        NodeIdx n = queue.back();
        queue.pop_back();
        for (uint32_t oi = 0; oi < neg.out[n].size(); ++oi)
            for (uint32_t di = 0; di < neg.dom[n].size(); ++di)
                for (NodeIdx t : neg.delta[n][oi][di])
                    if (!seen[t]) {
                        seen[t] = true;
                        queue.push_back(t);
                    }
    }
    f.all_nodes_locally_reachable =
        std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
    return f;
}

Negotiation restrict_processes(const Negotiation& neg, const std::vector<ProcIdx>& keep) {
    if (keep.empty()) throw PreconditionError("restriction needs a non-empty process set");
    std::vector<bool> keep_mask(neg.process_count(), false);
    for (ProcIdx p : keep) keep_mask.at(p) = true;

    RawNegotiation raw;
    raw.name = neg.name;
    for (ProcIdx p = 0; p < neg.process_count(); ++p)
        if (keep_mask[p]) raw.processes.push_back(neg.processes[p]);

    std::vector<bool> node_kept(neg.node_count(), false);
    for (NodeIdx n = 0; n < neg.node_count(); ++n) {
        RawNegotiation::Node rn;
        rn.id = neg.nodes[n];
        for (ProcIdx p : neg.dom[n])
            if (keep_mask[p]) rn.domain.push_back(neg.processes[p]);
        if (rn.domain.empty()) continue;
        node_kept[n] = true;
        raw.nodes.push_back(std::move(rn));
    }
    if (!node_kept[neg.n_init] || !node_kept[neg.n_fin])
        throw PreconditionError("restriction drops the initial or final node");
    raw.init = neg.nodes[neg.n_init];
    raw.fin = neg.nodes[neg.n_fin];

    for (NodeIdx n = 0; n < neg.node_count(); ++n) {
        if (!node_kept[n]) continue;
        RawNegotiation::Out o;
        o.node = neg.nodes[n];
        for (ResIdx r : neg.out[n]) o.results.push_back(neg.results[r]);
        if (neg.fin_terminal_result && n == neg.n_fin)
            o.results.push_back(neg.results[*neg.fin_terminal_result]);
        if (!o.results.empty()) raw.outs.push_back(std::move(o));
        for (uint32_t oi = 0; oi < neg.out[n].size(); ++oi)
            for (uint32_t di = 0; di < neg.dom[n].size(); ++di) {
                ProcIdx p = neg.dom[n][di];
                if (!keep_mask[p]) continue;
                RawNegotiation::Arc arc;
                arc.node = neg.nodes[n];
                arc.result = neg.results[neg.out[n][oi]];
                arc.process = neg.processes[p];
                for (NodeIdx t : neg.delta[n][oi][di])
                    if (node_kept[t]) arc.targets.push_back(neg.nodes[t]);
                if (arc.targets.empty())
                    throw PreconditionError(
                        "restriction empties delta(" + arc.node + "," + arc.result + "," +
                        arc.process + ")");
                raw.arcs.push_back(std::move(arc));
            }
    }

    ValidateResult vr = validate(raw);
    if (!vr.ok()) {
        std::string msg = "restriction produced an invalid negotiation:";
        for (const auto& e : vr.errors) msg += " " + e;
        throw PreconditionError(msg);
    }
    return std::move(*vr.negotiation);
}

std::string render_configuration(const Negotiation& neg, const Configuration& c) {
    std::ostringstream os;
    for (ProcIdx p = 0; p < c.ready.size(); ++p) {
        if (p) os << ", ";
        os << neg.processes[p] << ":{";
        for (size_t i = 0; i < c.ready[p].size(); ++i) {
            if (i) os << ",";
            os << neg.nodes[c.ready[p][i]];
        }
        os << "}";
    }
    return os.str();
}

std::string render_step(const Negotiation& neg, const Step& s) {
    return "(" + neg.nodes[s.node] + "," + neg.results[s.result] + ")";
}

std::string render_run(const Negotiation& neg, const Run& run) {
    std::string out;
    for (const Step& s : run.steps) out += render_step(neg, s);
    if (out.empty()) out = "(empty)";
    return out;
}

}  // namespace nego
