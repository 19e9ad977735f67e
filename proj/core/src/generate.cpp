#include "nego/generate.hpp"

#include <algorithm>
#include <functional>
#include <random>
#include <sstream>

namespace nego {

bool cnf_valid(const Cnf3& f) {
    if (f.variable_count == 0 || f.variable_count > 30) return false;
    for (const auto& c : f.clauses)
        for (int lit : c) {
            if (lit == 0) return false;
            uint32_t var = static_cast<uint32_t>(lit > 0 ? lit : -lit);
            if (var > f.variable_count) return false;
        }
    return !f.clauses.empty();
}

bool cnf_satisfiable(const Cnf3& f) {
    for (uint32_t assignment = 0; assignment < (1u << f.variable_count); ++assignment) {
        bool all = true;
        for (const auto& c : f.clauses) {
            bool clause = false;
            for (int lit : c) {
                uint32_t var = static_cast<uint32_t>(lit > 0 ? lit : -lit);
                bool value = (assignment >> (var - 1)) & 1;
                clause = clause || (lit > 0 ? value : !value);
            }
            all = all && clause;
        }
        if (all) return true;
    }
    return false;
}

Cnf3 parse_dimacs(const std::string& text) {
    Cnf3 f;
    std::istringstream in(text);
    std::string line;
    std::vector<int> pending;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == 'c' || line[0] == '%') continue;
        std::istringstream ls(line);
        if (line[0] == 'p') {
            std::string p, fmt;
            size_t clause_count;
            ls >> p >> fmt >> f.variable_count >> clause_count;
            continue;
        }
        int lit;
        while (ls >> lit) {
            if (lit == 0) {
                if (pending.size() != 3)
                    throw PreconditionError("DIMACS clause is not exactly 3 literals");
                f.clauses.push_back({pending[0], pending[1], pending[2]});
                pending.clear();
            } else {
                pending.push_back(lit);
            }
        }
    }
    if (!pending.empty()) throw PreconditionError("DIMACS clause missing terminating 0");
    return f;
}

Negotiation gen_from_cnf(const Cnf3& f) {
    if (!cnf_valid(f)) throw PreconditionError("malformed 3-CNF formula");
    uint32_t k = f.variable_count;
    uint32_t m = static_cast<uint32_t>(f.clauses.size());

    auto var_of = [&](uint32_t j, uint32_t d) {
        int lit = f.clauses[j - 1][d - 1];
        return static_cast<uint32_t>(lit > 0 ? lit : -lit);
    };
    auto positive = [&](uint32_t j, uint32_t d) { return f.clauses[j - 1][d - 1] > 0; };
    auto wrap_next = [&](uint32_t j) { return j == m ? 1 : j + 1; };

    auto name = [&](const char* prefix, uint32_t a, int b = -1) {
        std::string s = prefix + std::to_string(a);
        if (b >= 0) s += "_" + std::to_string(b);
        return s;
    };

    RawNegotiation raw;
    raw.name = "cnf_gadget";
    raw.init = "ninit";
    raw.fin = "nfin";

    // Processes.
    raw.processes.push_back("E");
    for (uint32_t j = 1; j <= m; ++j) raw.processes.push_back(name("V", j));
    for (uint32_t j = 1; j <= m; ++j)
        for (uint32_t d = 1; d <= 3; ++d) {
            raw.processes.push_back(name("T", j, static_cast<int>(d)));
            raw.processes.push_back(name("Tp", j, static_cast<int>(d)));
            raw.processes.push_back(name("P", j, static_cast<int>(d)));
        }

    // Node declarations with domains.
    auto add_node = [&](const std::string& id, std::vector<std::string> dom) {
        raw.nodes.push_back({id, std::move(dom)});
    };
    add_node("ninit", raw.processes);

    std::vector<std::vector<std::string>> watchers_of_var(k + 1);
    for (uint32_t j = 1; j <= m; ++j)
        for (uint32_t d = 1; d <= 3; ++d)
            watchers_of_var[var_of(j, d)].push_back(name("P", j, static_cast<int>(d)));

    for (uint32_t i = 0; i <= k; ++i) {
        std::vector<std::string> dom{"E"};
        if (i < k)
            for (const auto& w : watchers_of_var[i + 1]) dom.push_back(w);
        add_node(name("m", i), std::move(dom));
        if (i < k) {
            std::vector<std::string> vdom{"E"};
            for (const auto& w : watchers_of_var[i + 1]) vdom.push_back(w);
            add_node(name("np", i + 1), vdom);
            add_node(name("nm", i + 1), vdom);
        }
    }
    for (uint32_t j = 1; j <= m; ++j) {
        std::vector<std::string> tdom{name("V", j == 1 ? m : j - 1)};
        for (uint32_t d = 1; d <= 3; ++d) tdom.push_back(name("T", j, static_cast<int>(d)));
        add_node(name("t", j), std::move(tdom));
        std::vector<std::string> tpdom{name("V", j)};
        for (uint32_t d = 1; d <= 3; ++d) tpdom.push_back(name("Tp", j, static_cast<int>(d)));
        add_node(name("tp", j), std::move(tpdom));
        for (uint32_t d = 1; d <= 3; ++d) {
            add_node(name("mc", j, static_cast<int>(d)), {name("T", j, static_cast<int>(d))});
            add_node(name("nc", j, static_cast<int>(d)),
                     {name("Tp", j, static_cast<int>(d)), name("P", j, static_cast<int>(d))});
            add_node(name("rc", j, static_cast<int>(d)),
                     {name("T", j, static_cast<int>(d)), name("P", j, static_cast<int>(d))});
        }
    }
    add_node("nfin", raw.processes);

    // Results.
    for (const auto& n : raw.nodes) {
        if (n.id == "nfin") continue;
        bool chooser = n.id[0] == 'm' && n.id.find('_') == std::string::npos &&
                       n.id != name("m", k);
        if (chooser)
            raw.outs.push_back({n.id, {"1", "0"}});
        else
            raw.outs.push_back({n.id, {"a"}});
    }

    auto arc = [&](const std::string& n, const std::string& r, const std::string& p,
                   std::vector<std::string> targets) {
        raw.arcs.push_back({n, r, p, std::move(targets)});
    };

    // ninit.
    arc("ninit", "a", "E", {"m0"});
    for (uint32_t j = 1; j <= m; ++j) {
        arc("ninit", "a", name("V", j), {name("tp", j)});
        for (uint32_t d = 1; d <= 3; ++d) {
            arc("ninit", "a", name("T", j, static_cast<int>(d)), {name("t", j)});
            arc("ninit", "a", name("Tp", j, static_cast<int>(d)),
                {name("nc", j, static_cast<int>(d))});
            arc("ninit", "a", name("P", j, static_cast<int>(d)),
                {name("m", var_of(j, d) - 1)});
        }
    }

    // Variable chain: m_{i-1} chooses n_i^+ / n_i^-, both continue to m_i.
    for (uint32_t i = 1; i <= k; ++i) {
        std::vector<std::string> at_choice{"E"};
        for (const auto& w : watchers_of_var[i]) at_choice.push_back(w);
        for (const auto& p : at_choice) {
            arc(name("m", i - 1), "1", p, {name("np", i)});
            arc(name("m", i - 1), "0", p, {name("nm", i)});
        }
        arc(name("np", i), "a", "E", {name("m", i)});
        arc(name("nm", i), "a", "E", {name("m", i)});
    }
    arc(name("m", k), "a", "E", {"nfin"});

    // Watcher wiring after the chosen polarity node.
    for (uint32_t j = 1; j <= m; ++j)
        for (uint32_t d = 1; d <= 3; ++d) {
            uint32_t i = var_of(j, d);
            std::string p = name("P", j, static_cast<int>(d));
            std::string rc = name("rc", j, static_cast<int>(d));
            std::string nc = name("nc", j, static_cast<int>(d));
            if (positive(j, d)) {
                arc(name("np", i), "a", p, {rc});
                arc(name("nm", i), "a", p, {nc});
            } else {
                arc(name("np", i), "a", p, {nc});
                arc(name("nm", i), "a", p, {rc});
            }
            arc(rc, "a", p, {"nfin", nc});
            arc(nc, "a", p, {"nfin", rc});
        }

    // Clause machinery.
    for (uint32_t j = 1; j <= m; ++j) {
        arc(name("t", j), "a", name("V", j == 1 ? m : j - 1), {"nfin"});
        arc(name("tp", j), "a", name("V", j), {name("t", wrap_next(j))});
        for (uint32_t d = 1; d <= 3; ++d) {
            std::string tjd = name("T", j, static_cast<int>(d));
            std::string tpjd = name("Tp", j, static_cast<int>(d));
            arc(name("t", j), "a", tjd, {name("mc", j, static_cast<int>(d))});
            arc(name("mc", j, static_cast<int>(d)), "a", tjd,
                {name("rc", j, static_cast<int>(d))});
            arc(name("rc", j, static_cast<int>(d)), "a", tjd, {"nfin"});
            arc(name("nc", j, static_cast<int>(d)), "a", tpjd, {name("tp", j)});
            arc(name("tp", j), "a", tpjd, {"nfin"});
        }
    }

    ValidateResult vr = validate(raw);
    if (!vr.ok())
        throw std::logic_error("cnf gadget failed validation: " + vr.errors.front());
    return std::move(*vr.negotiation);
}

Negotiation gen_from_digraph(const Digraph& g, uint32_t s, uint32_t t) {
    if (s >= g.vertex_count || t >= g.vertex_count || s == t)
        throw PreconditionError("bad source/target vertices");
    for (auto [u, v] : g.edges) {
        if (u >= g.vertex_count || v >= g.vertex_count)
            throw PreconditionError("edge out of range");
        if (v == s) throw PreconditionError("source must have no incoming edges");
        if (u == t) throw PreconditionError("target must have no outgoing edges");
    }

    RawNegotiation raw;
    raw.name = "digraph_gadget";
    raw.processes = {"p"};
    auto vname = [](uint32_t v) { return "v" + std::to_string(v); };
    raw.init = vname(s);
    raw.fin = vname(t);
    for (uint32_t v = 0; v < g.vertex_count; ++v) raw.nodes.push_back({vname(v), {"p"}});

    std::vector<std::vector<uint32_t>> out(g.vertex_count);
    for (uint32_t e = 0; e < g.edges.size(); ++e) out[g.edges[e].first].push_back(e);

    for (uint32_t v = 0; v < g.vertex_count; ++v) {
        RawNegotiation::Out o;
        o.node = vname(v);
        for (uint32_t e : out[v]) {
            std::string r = "e" + std::to_string(g.edges[e].first) + "_" +
                            std::to_string(g.edges[e].second);
            o.results.push_back(r);
            raw.arcs.push_back({vname(v), r, "p", {vname(g.edges[e].second)}});
        }
        if (v != t) {
            o.results.push_back("back");
            raw.arcs.push_back({vname(v), "back", "p", {vname(s)}});
        }
        if (!o.results.empty()) raw.outs.push_back(std::move(o));
    }

    ValidateResult vr = validate(raw);
    if (!vr.ok())
        throw std::logic_error("digraph gadget failed validation: " + vr.errors.front());
    return std::move(*vr.negotiation);
}

namespace {

Negotiation gen_random_attempt(const GenParams& params, std::mt19937_64& rng) {
    uint32_t nn = std::max(params.nodes, 2u);
    uint32_t np = std::max(params.procs, 1u);
    uint32_t nr = std::max(params.max_results, 1u);

    RawNegotiation raw;
    raw.name = "random";
    for (uint32_t p = 0; p < np; ++p) raw.processes.push_back("p" + std::to_string(p));
    auto nname = [](uint32_t n) { return "x" + std::to_string(n); };
    raw.init = nname(0);
    raw.fin = nname(nn - 1);

    bool anchored = params.weakly_nd && !params.deterministic;
    std::vector<std::vector<uint32_t>> doms(nn);
    for (uint32_t n = 0; n < nn; ++n) {
        std::vector<uint32_t> d;
        if (n == 0 || n == nn - 1) {
            for (uint32_t p = 0; p < np; ++p) d.push_back(p);
        } else {
            if (anchored) d.push_back(0);  // deterministic anchor everywhere
            uint32_t extra = 1 + rng() % std::min<uint32_t>(3, np);
            for (uint32_t i = 0; i < extra; ++i) d.push_back(rng() % np);
            std::sort(d.begin(), d.end());
            d.erase(std::unique(d.begin(), d.end()), d.end());
        }
        doms[n] = d;
        RawNegotiation::Node node;
        node.id = nname(n);
        for (uint32_t p : d) node.domain.push_back("p" + std::to_string(p));
        raw.nodes.push_back(std::move(node));
    }

    for (uint32_t n = 0; n + 1 < nn; ++n) {
        uint32_t results = 1 + rng() % nr;
        RawNegotiation::Out o;
        o.node = nname(n);
        for (uint32_t r = 0; r < results; ++r) o.results.push_back("r" + std::to_string(r));
        raw.outs.push_back(o);

        for (uint32_t r = 0; r < results; ++r)
            for (uint32_t p : doms[n]) {
                // Forward candidates always include fin; backward candidates
                // only when a cyclic instance was requested.
                std::vector<uint32_t> forward, backward;
                for (uint32_t n2 = 0; n2 < nn; ++n2) {
                    if (!std::binary_search(doms[n2].begin(), doms[n2].end(), p)) continue;
                    (n2 > n ? forward : backward).push_back(n2);
                }
                std::vector<uint32_t> targets;
                bool deterministic_here = params.deterministic || (anchored && p == 0);
                uint32_t want = deterministic_here || (rng() % 5 < 3) ? 1 : 2;
                for (uint32_t i = 0; i < want; ++i) {
                    if (!params.acyclic && !backward.empty() && rng() % 4 == 0)
                        targets.push_back(backward[rng() % backward.size()]);
                    else
                        targets.push_back(forward[rng() % forward.size()]);
                }
                std::sort(targets.begin(), targets.end());
                targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
                RawNegotiation::Arc arc;
                arc.node = nname(n);
                arc.result = "r" + std::to_string(r);
                arc.process = "p" + std::to_string(p);
                for (uint32_t tgt : targets) arc.targets.push_back(nname(tgt));
                raw.arcs.push_back(std::move(arc));
            }
    }

    ValidateResult vr = validate(raw);
    if (!vr.ok())
        throw std::logic_error("random negotiation failed validation: " + vr.errors.front());
    return std::move(*vr.negotiation);
}

}  // namespace

Negotiation gen_random(const GenParams& params, uint64_t seed) {
    if (params.nodes < 2 || params.procs < 1 || params.max_results < 1)
        throw PreconditionError("generator parameters must be positive (nodes >= 2)");
    if (params.weakly_nd && params.procs < 2)
        throw PreconditionError("weakly non-deterministic generation needs >= 2 processes");

    std::mt19937_64 rng(seed);
    for (int attempt = 0; attempt < 300; ++attempt) {
        Negotiation neg = gen_random_attempt(params, rng);
        ClassFlags flags = classify(neg);
        if (flags.deterministic != params.deterministic) continue;
        if (flags.acyclic != params.acyclic) continue;
        if (params.weakly_nd && !flags.weakly_nd) continue;
        return neg;
    }
    throw BudgetExceeded("rejection sampling could not satisfy the requested class flags");
}

Negotiation gen_sound_workflow(uint32_t nodes, uint32_t procs, uint64_t seed) {
    if (nodes < 2 || procs < 1) throw PreconditionError("need nodes >= 2 and procs >= 1");
    std::mt19937_64 rng(seed);

    // Per-process walks; arcs connect consecutive walk entries.
    std::vector<std::vector<uint32_t>> walk(procs);
    std::vector<std::vector<uint32_t>> dom_of;
    uint32_t budget = nodes - 2;

    auto fresh_node = [&](const std::vector<uint32_t>& procs_here) {
        uint32_t id = static_cast<uint32_t>(dom_of.size());
        dom_of.push_back(procs_here);
        for (uint32_t p : procs_here) walk[p].push_back(id);
        return id;
    };

    std::vector<uint32_t> all(procs);
    for (uint32_t p = 0; p < procs; ++p) all[p] = p;
    fresh_node(all);  // init

    // Emit fork/join blocks until the node budget runs out.
    std::function<void(std::vector<uint32_t>, uint32_t)> block =
        [&](std::vector<uint32_t> group, uint32_t quota) {
            while (quota > 0) {
                if (group.size() > 1 && quota >= 3 && rng() % 2 == 0) {
                    uint32_t cut = 1 + rng() % (group.size() - 1);
                    std::vector<uint32_t> left(group.begin(), group.begin() + cut);
                    std::vector<uint32_t> right(group.begin() + cut, group.end());
                    uint32_t sub = (quota - 1) / 2;
                    block(left, sub);
                    block(right, quota - 1 - sub);
                    fresh_node(group);  // join
                    return;
                }
                fresh_node(group);
                --quota;
            }
        };
    block(all, budget);
    fresh_node(all);  // fin

    RawNegotiation raw;
    raw.name = "workflow";
    for (uint32_t p = 0; p < procs; ++p) raw.processes.push_back("p" + std::to_string(p));
    auto nname = [](uint32_t n) { return "x" + std::to_string(n); };
    raw.init = nname(0);
    raw.fin = nname(static_cast<uint32_t>(dom_of.size()) - 1);
    for (uint32_t n = 0; n < dom_of.size(); ++n) {
        RawNegotiation::Node node;
        node.id = nname(n);
        for (uint32_t p : dom_of[n]) node.domain.push_back("p" + std::to_string(p));
        raw.nodes.push_back(std::move(node));
        if (n + 1 < dom_of.size()) raw.outs.push_back({nname(n), {"a"}});
    }
    for (uint32_t p = 0; p < procs; ++p)
        for (size_t i = 0; i + 1 < walk[p].size(); ++i)
            raw.arcs.push_back(
                {nname(walk[p][i]), "a", "p" + std::to_string(p), {nname(walk[p][i + 1])}});

    ValidateResult vr = validate(raw);
    if (!vr.ok())
        throw std::logic_error("workflow generator failed validation: " + vr.errors.front());
    return std::move(*vr.negotiation);
}

}  // namespace nego
