// Acceptance suite: runs every release criterion and prints one line each.
// Exit code 0 iff all criteria hold.

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nego/data.hpp"
#include "nego/games.hpp"
#include "nego/generate.hpp"
#include "nego/graph.hpp"
#include "nego/model.hpp"
#include "nego/ngt.hpp"
#include "nego/patterns.hpp"
#include "nego/reach.hpp"
#include "nego/weak.hpp"

using namespace nego;
using clock_type = std::chrono::steady_clock;

namespace {

struct Criterion {
    bool pass = true;
    std::ostringstream log;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            pass = false;
            log << (log.str().empty() ? "" : "; ") << what;
        }
    }
};

Negotiation load(const std::string& name) {
    NgtResult res = parse_ngt_file(std::string(NEGO_FIXTURE_DIR) + "/" + name);
    if (!res.ok()) throw std::runtime_error(name + ": " + format_errors(res.errors));
    return res.parsed->data.base;
}

DataNegotiation load_data(const std::string& name) {
    NgtResult res = parse_ngt_file(std::string(NEGO_FIXTURE_DIR) + "/" + name);
    if (!res.ok()) throw std::runtime_error(name + ": " + format_errors(res.errors));
    return res.parsed->data;
}

bool decide_sound(const Negotiation& neg) {
    ClassFlags flags = classify(neg);
    if (flags.deterministic) return det_soundness(neg).sound;
    if (flags.acyclic && flags.weakly_nd) return weak_soundness(neg).sound;
    return oracle_sound(neg).sound;
}

// ---------- corpora ----------------------------------------------------------

std::vector<Negotiation> random_deterministic(size_t want, bool mixed_cyclic) {
    std::vector<Negotiation> out;
    for (uint64_t seed = 1; out.size() < want; ++seed) {
        GenParams params;
        params.nodes = 4 + seed % 7;  // up to 10 nodes
        params.procs = 2 + seed % 3;  // up to 4 processes
        params.max_results = 2;
        params.deterministic = true;
        params.acyclic = mixed_cyclic ? (seed % 2 == 0) : true;
        try {
            out.push_back(gen_random(params, seed * 9176 + 11));
        } catch (const BudgetExceeded&) {
        }
        if (seed > want * 50) break;
    }
    return out;
}

std::vector<Negotiation> random_sound_acyclic_det(size_t want) {
    std::vector<Negotiation> out;
    for (uint64_t seed = 1; out.size() < want; ++seed) {
        GenParams params;
        params.nodes = 4 + seed % 7;
        params.procs = 2 + seed % 3;
        params.max_results = 2;
        params.deterministic = true;
        params.acyclic = true;
        try {
            Negotiation neg = gen_random(params, seed * 7919 + 3);
            if (oracle_sound(neg).sound) out.push_back(std::move(neg));
        } catch (const BudgetExceeded&) {
        }
        if (seed > want * 100) break;
    }
    return out;
}

// ---------- criteria ---------------------------------------------------------

Criterion criterion1() {
    Criterion c;
    struct Row {
        const char* file;
        bool sound;
    };
    for (Row row : std::initializer_list<Row>{{"FIG1L.ngt", true},
                                              {"FIG1M.ngt", true},
                                              {"FIG1R.ngt", true},
                                              {"FIG1R-MOD.ngt", false},
                                              {"FIG1L-MOD.ngt", false},
                                              {"ANTI-F.ngt", false},
                                              {"ANTI-C.ngt", false},
                                              {"NODOM.ngt", true}}) {
        auto t0 = clock_type::now();
        bool sound = decide_sound(load(row.file));
        auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(clock_type::now() - t0)
                      .count();
        c.require(sound == row.sound,
                  std::string(row.file) + " expected " + (row.sound ? "sound" : "unsound"));
        c.require(ms < 1000, std::string(row.file) + " exceeded 1 s");
    }
    // NODOM goes through the oracle path: neither deterministic nor an
    // acyclic weakly non-deterministic negotiation.
    ClassFlags nodom = classify(load("NODOM.ngt"));
    c.require(!nodom.deterministic && !nodom.acyclic, "NODOM must route to the oracle");
    return c;
}

Criterion criterion2() {
    Criterion c;

    Negotiation antif = load("ANTI-F.ngt");
    auto f = find_pattern_F(antif);
    c.require(f.has_value(), "ANTI-F: no F witness");
    if (f) {
        c.require(f->fork.p1 == antif.proc_id("p0") && f->fork.p2 == antif.proc_id("p1") &&
                      f->fork.end1 == antif.node_id("n1") && f->fork.end2 == antif.node_id("n2"),
                  "ANTI-F fork is not (p0,p1,n1,n2)");
    }

    Negotiation antic = load("ANTI-C.ngt");
    auto cc = find_pattern_C(antic);
    c.require(cc.has_value(), "ANTI-C: no C witness");
    if (cc) {
        std::set<NodeIdx> nodes;
        for (const NegEdge& e : cc->circuit) nodes.insert(e.from);
        std::set<NodeIdx> expected{antic.node_id("n1"), antic.node_id("n2"),
                                   antic.node_id("n3")};
        c.require(nodes == expected, "ANTI-C circuit is not {n1,n2,n3}");
    }
    c.require(!find_pattern_F(antic).has_value(), "ANTI-C must have no F pattern");

    Negotiation mod = load("FIG1L-MOD.ngt");
    auto f2 = find_pattern_F(mod);
    c.require(f2.has_value(), "FIG1L-MOD: no F witness");
    if (f2) {
        c.require(f2->fork.p1 == mod.proc_id("p0") && f2->fork.p2 == mod.proc_id("p1") &&
                      f2->fork.end1 == mod.node_id("n4") && f2->fork.end2 == mod.node_id("n5"),
                  "FIG1L-MOD fork is not (p0,p1,n4,n5)");
    }

    Negotiation rmod = load("FIG1R-MOD.ngt");
    auto verdict = oracle_sound(rmod);
    c.require(!verdict.sound && verdict.witness.has_value(), "FIG1R-MOD must be oracle-unsound");
    if (verdict.witness) {
        std::vector<Step> expected{{rmod.node_id("n0"), rmod.result_id("a")},
                                   {rmod.node_id("n1"), rmod.result_id("b")}};
        c.require(verdict.witness->steps == expected,
                  "FIG1R-MOD oracle witness is not (n0,a)(n1,b)");
    }
    return c;
}

Criterion criterion3() {
    Criterion c;
    auto corpus = random_deterministic(1000, true);
    c.require(corpus.size() >= 1000, "could not generate 1000 deterministic instances");
    size_t cyclic_count = 0, unsound_count = 0;
    for (size_t i = 0; i < corpus.size(); ++i) {
        const Negotiation& neg = corpus[i];
        bool fast = det_soundness(neg).sound;
        bool slow = oracle_sound(neg).sound;
        if (fast != slow) {
            c.require(false, "disagreement at corpus index " + std::to_string(i));
            break;
        }
        cyclic_count += !classify(neg).acyclic;
        unsound_count += !slow;
    }
    c.require(cyclic_count >= 200, "corpus lacks cyclic samples");
    c.require(unsound_count >= 100 && unsound_count <= corpus.size() - 100,
              "corpus lacks verdict variety");
    c.log << (c.log.str().empty() ? "" : "; ") << corpus.size() << " instances, "
          << cyclic_count << " cyclic, " << unsound_count << " unsound";
    return c;
}

Criterion criterion4() {
    Criterion c;
    auto corpus = random_sound_acyclic_det(500);
    c.require(corpus.size() >= 500, "could not collect 500 sound instances");
    std::mt19937_64 rng(20240801);
    size_t eve_wins = 0;
    for (size_t i = 0; i < corpus.size() && c.pass; ++i) {
        const Negotiation& neg = corpus[i];
        std::vector<NodeIdx> b;
        for (NodeIdx n = 0; n < neg.node_count(); ++n)
            if (n != neg.n_fin && rng() % 3 == 0) b.push_back(n);

        bool eve = eve_winning(build_arena(neg, b)).eve_wins_from_initial;
        OmitQuery q;
        q.omit_nodes = b;
        auto run = oracle_omit(neg, q);
        if (eve != run.has_value()) {
            c.require(false, "game/oracle disagreement at index " + std::to_string(i));
            break;
        }
        eve_wins += eve;
        if (run) {
            OmitInstance inst;
            inst.omit_nodes = b;
            auto plan = solve_omitting(neg, inst);
            if (!plan) {
                c.require(false,
                          "solver found no plan though Eve wins, index " + std::to_string(i));
                break;
            }
            auto trace = replay(neg, plan->run);
            c.require(is_terminal(neg, trace.back()), "extracted run does not complete");
            for (const Step& s : plan->run.steps)
                if (std::find(b.begin(), b.end(), s.node) != b.end()) {
                    c.require(false, "extracted run enters B");
                    break;
                }
        }
    }
    c.log << (c.log.str().empty() ? "" : "; ") << corpus.size() << " instances, " << eve_wins
          << " Eve wins";
    return c;
}

Criterion criterion5() {
    Criterion c;
    auto corpus = random_sound_acyclic_det(500);
    c.require(corpus.size() >= 500, "could not collect 500 sound instances");
    std::mt19937_64 rng(998877);
    size_t positives = 0;
    for (size_t i = 0; i < corpus.size() && c.pass; ++i) {
        const Negotiation& neg = corpus[i];
        std::vector<std::pair<NodeIdx, ResIdx>> pool;
        for (NodeIdx n = 0; n < neg.node_count(); ++n)
            for (ResIdx r : neg.out[n]) pool.push_back({n, r});
        std::vector<std::pair<NodeIdx, ResIdx>> p;
        size_t count = 1 + rng() % 2;
        for (size_t k = 0; k < count; ++k) p.push_back(pool[rng() % pool.size()]);

        OmitInstance inst;
        inst.include = p;
        OmitQuery q;
        for (auto [n, r] : p) q.include.push_back({n, r});

        auto plan = solve_omitting(neg, inst);
        auto run = oracle_omit(neg, q);
        if (plan.has_value() != run.has_value()) {
            c.require(false, "solver/oracle disagreement at index " + std::to_string(i));
            break;
        }
        positives += plan.has_value();

        NodeIdx branchy = kInvalidIdx;
        for (NodeIdx n = 0; n < neg.node_count(); ++n)
            if (neg.out[n].size() >= 2) branchy = n;
        if (branchy != kInvalidIdx) {
            OmitInstance both;
            both.include = {{branchy, neg.out[branchy][0]}, {branchy, neg.out[branchy][1]}};
            if (solve_omitting(neg, both).has_value()) {
                c.require(false,
                          "two results of one node accepted at index " + std::to_string(i));
                break;
            }
        }
    }
    c.require(positives >= 100 && positives <= 450, "P corpus lacks verdict variety");
    c.log << (c.log.str().empty() ? "" : "; ") << positives << " positive instances";
    return c;
}

Criterion criterion6() {
    Criterion c;
    size_t collected = 0, sound_count = 0;
    for (uint64_t seed = 1; collected < 500 && seed <= 500 * 100; ++seed) {
        GenParams params;
        params.nodes = 4 + seed % 7;
        params.procs = 2 + seed % 3;
        params.max_results = 2;
        params.acyclic = true;
        params.deterministic = false;
        params.weakly_nd = true;
        Negotiation neg;
        try {
            neg = gen_random(params, seed * 6007 + 1);
        } catch (const BudgetExceeded&) {
            continue;
        }
        ++collected;
        bool fast = weak_soundness(neg).sound;
        bool slow = oracle_sound(neg).sound;
        if (fast != slow) {
            c.require(false, "disagreement at seed " + std::to_string(seed));
            break;
        }
        sound_count += slow;
    }
    c.require(collected >= 500, "could not collect 500 weakly non-deterministic instances");
    c.require(sound_count >= 50 && sound_count <= collected - 50,
              "corpus lacks verdict variety");
    c.log << (c.log.str().empty() ? "" : "; ") << collected << " instances, " << sound_count
          << " sound";
    return c;
}

// Canonical enumeration of 3-CNF formulas over <= 3 variables and <= 3
// clauses, up to variable permutation and polarity flips.
std::vector<Cnf3> cnf_representatives() {
    std::vector<std::array<int, 3>> clauses;
    for (int a = -3; a <= 3; ++a)
        for (int b = a; b <= 3; ++b)
            for (int d = b; d <= 3; ++d) {
                if (a == 0 || b == 0 || d == 0) continue;
                clauses.push_back({a, b, d});
            }
    std::vector<std::array<uint32_t, 3>> perms{{1, 2, 3}, {1, 3, 2}, {2, 1, 3},
                                               {2, 3, 1}, {3, 1, 2}, {3, 2, 1}};
    auto transform = [](const std::vector<std::array<int, 3>>& formula,
                        const std::array<uint32_t, 3>& perm, uint32_t flips) {
        std::vector<std::array<int, 3>> out;
        for (const auto& cl : formula) {
            std::array<int, 3> t;
            for (int i = 0; i < 3; ++i) {
                int lit = cl[i];
                uint32_t var = static_cast<uint32_t>(lit > 0 ? lit : -lit);
                int sign = lit > 0 ? 1 : -1;
                if ((flips >> (var - 1)) & 1) sign = -sign;
                t[i] = sign * static_cast<int>(perm[var - 1]);
            }
            std::sort(t.begin(), t.end());
            out.push_back(t);
        }
        std::sort(out.begin(), out.end());
        return out;
    };

    std::vector<Cnf3> reps;
    std::vector<std::array<int, 3>> formula;
    std::function<void(size_t)> rec = [&](size_t start) {
        if (!formula.empty()) {
            bool minimal = true;
            for (const auto& perm : perms)
                for (uint32_t flips = 0; flips < 8 && minimal; ++flips)
                    if (transform(formula, perm, flips) < formula) minimal = false;
            if (minimal) {
                Cnf3 f;
                f.variable_count = 3;
                f.clauses = formula;
                reps.push_back(f);
            }
        }
        if (formula.size() == 3) return;
        for (size_t i = start; i < clauses.size(); ++i) {
            formula.push_back(clauses[i]);
            rec(i + 1);
            formula.pop_back();
        }
    };
    rec(0);
    return reps;
}

Criterion criterion7() {
    Criterion c;
    auto reps = cnf_representatives();
    c.require(reps.size() >= 400,
              "suspiciously few canonical formulas: " + std::to_string(reps.size()));
    size_t sat_count = 0;
    for (size_t i = 0; i < reps.size(); ++i) {
        const Cnf3& f = reps[i];
        Negotiation neg = gen_from_cnf(f);
        ClassFlags flags = classify(neg);
        if (!flags.det_acyclic || !flags.very_weakly_nd) {
            c.require(false, "gadget class flags wrong at representative " + std::to_string(i));
            break;
        }
        bool sat = cnf_satisfiable(f);
        bool unsound = !oracle_sound(neg, 4000000).sound;
        if (sat != unsound) {
            c.require(false, "sat/unsound mismatch at representative " + std::to_string(i));
            break;
        }
        sat_count += sat;
    }
    c.log << (c.log.str().empty() ? "" : "; ") << reps.size() << " formulas, " << sat_count
          << " satisfiable";
    return c;
}

Criterion criterion8() {
    Criterion c;
    std::mt19937_64 rng(777);
    for (int iter = 0; iter < 200; ++iter) {
        uint32_t n = 4 + rng() % 12;  // up to 15 vertices
        Digraph g;
        g.vertex_count = n;
        std::vector<uint32_t> perm(n);
        for (uint32_t i = 0; i < n; ++i) perm[i] = i;
        for (uint32_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng() % (i + 1)]);
        std::vector<uint32_t> pos(n);
        for (uint32_t i = 0; i < n; ++i) pos[perm[i]] = i;
        for (uint32_t u = 0; u < n; ++u)
            for (uint32_t v = 0; v < n; ++v) {
                if (u == v || v == 0 || u == 1 || pos[u] >= pos[v]) continue;
                if (rng() % 3 == 0) g.edges.push_back({u, v});
            }
        std::vector<bool> seen(n, false);
        std::vector<uint32_t> queue{0};
        seen[0] = true;
        while (!queue.empty()) {
            uint32_t u = queue.back();
            queue.pop_back();
            for (auto [a, b] : g.edges)
                if (a == u && !seen[b]) {
                    seen[b] = true;
                    queue.push_back(b);
                }
        }
        bool sound = det_soundness(gen_from_digraph(g, 0, 1)).sound;
        if (sound != seen[1]) {
            c.require(false, "reachability mismatch at iteration " + std::to_string(iter));
            break;
        }
    }
    return c;
}

Criterion criterion9() {
    Criterion c;
    auto corpus = random_sound_acyclic_det(500);
    c.require(corpus.size() >= 500, "could not collect 500 sound instances");
    size_t races_found = 0, pairs = 0;
    for (size_t i = 0; i < corpus.size() && c.pass; ++i) {
        const Negotiation& neg = corpus[i];
        ReachGraph graph(neg);
        for (NodeIdx m = 0; m < neg.node_count(); ++m)
            for (NodeIdx n = m + 1; n < neg.node_count(); ++n) {
                bool slow = oracle_concurrent(graph, m, n).has_value();
                bool fast = race(neg, m, n).race();
                ++pairs;
                races_found += fast;
                if (fast != slow) {
                    c.require(false, "race mismatch at instance " + std::to_string(i));
                    break;
                }
            }
    }
    Negotiation fig1l = load("FIG1L.ngt");
    c.require(oracle_concurrent(fig1l, fig1l.node_id("n1"), fig1l.node_id("n2")).has_value(),
              "FIG1L n1/n2 must be concurrently enabled");
    c.log << (c.log.str().empty() ? "" : "; ") << pairs << " pairs, " << races_found
          << " races";
    return c;
}

Criterion criterion10() {
    Criterion c;
    DataNegotiation data1 = load_data("DATA1.ngt");
    const Negotiation& neg = data1.base;

    auto inconsistent = builtin_spec(data1, BuiltinSpecKind::inconsistent, data1.var_id("x2"));
    c.require(inconsistent.holds, "inconsistent(x2) not found");
    if (inconsistent.holds)
        c.require(inconsistent.first == NodeResult{neg.node_id("n2"), neg.result_id("a")} &&
                      inconsistent.second == NodeResult{neg.node_id("n3"), neg.result_id("b")},
                  "inconsistent(x2) pair is not (n2,a)/(n3,b)");

    auto redundant = builtin_spec(data1, BuiltinSpecKind::weakly_redundant, data1.var_id("x2"));
    c.require(redundant.holds, "weakly-redundant(x2) not found");
    if (redundant.holds)
        c.require(redundant.first == NodeResult{neg.node_id("n3"), neg.result_id("b")} &&
                      redundant.second == NodeResult{neg.n_fin, data1.fin_result()} &&
                      data1.result_name(data1.fin_result()) == "a",
                  "weakly-redundant(x2) pair is not ((n3,b),(n5,a))");

    auto destroyed = builtin_spec(data1, BuiltinSpecKind::never_destroyed, data1.var_id("x1"));
    c.require(destroyed.holds && destroyed.witness.has_value(),
              "never-destroyed(x1) not found");
    if (destroyed.holds && destroyed.witness) {
        for (const Step& s : destroyed.witness->steps)
            c.require(!(s.node == neg.node_id("n4") && s.result == neg.result_id("b")),
                      "never-destroyed(x1) witness takes (n4,b)");
    }

    // Fast path versus oracle on the acyclic variant, exact pairs.
    DataNegotiation acyc = load_data("DATA1-ACYC.ngt");
    for (auto kind : {BuiltinSpecKind::weakly_redundant, BuiltinSpecKind::never_destroyed})
        for (const char* var : {"x1", "x2"}) {
            DataSpec spec = builtin_spec_triple(acyc, kind, acyc.var_id(var));
            SpecVerdict fast = spec_compliance(acyc, spec);
            auto slow = oracle_spec(acyc, spec);
            c.require(fast.complies() == !slow.has_value(),
                      spec.name + ": fast/oracle verdict mismatch");
            if (!fast.complies() && slow)
                c.require(fast.violation->first == slow->first &&
                              fast.violation->second == slow->second,
                          spec.name + ": fast/oracle witness pairs differ");
        }
    DataSpec spec =
        builtin_spec_triple(acyc, BuiltinSpecKind::weakly_redundant, acyc.var_id("x2"));
    SpecVerdict v = spec_compliance(acyc, spec);
    c.require(!v.complies() &&
                  v.violation->first ==
                      NodeResult{acyc.base.node_id("n3"), acyc.base.result_id("b")} &&
                  v.violation->second == NodeResult{acyc.base.n_fin, acyc.fin_result()},
              "DATA1-ACYC weakly-redundant(x2) pair is not ((n3,b),(n5,a))");
    return c;
}

Criterion criterion11() {
    Criterion c;
    Negotiation big = gen_sound_workflow(10000, 100, 2024);
    c.require(big.node_count() == 10000 && big.process_count() == 100,
              "scale instance has wrong dimensions");
    auto t0 = clock_type::now();
    auto verdict = det_soundness(big);
    auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(clock_type::now() - t0).count();
    c.require(verdict.sound, "scale instance misclassified");
    c.require(ms < 5000, "det_soundness took " + std::to_string(ms) + " ms (budget 5000)");
    c.log << (c.log.str().empty() ? "" : "; ") << ms << " ms";
    return c;
}

}  // namespace

int main() {
    struct Entry {
        int number;
        const char* title;
        std::function<Criterion()> run;
    };
    std::vector<Entry> entries{
        {1, "fixture verdicts", criterion1},
        {2, "witness fidelity", criterion2},
        {3, "anti-pattern characterization vs oracle (1000 deterministic)", criterion3},
        {4, "game lemmas: Eve wins iff omitting run exists (500 sound)", criterion4},
        {5, "K-omitting solver vs oracle (500 sound, |P| <= 2)", criterion5},
        {6, "weak soundness vs oracle (500 weakly non-deterministic)", criterion6},
        {7, "SAT gadget: satisfiable iff unsound (all <=3x3 formulas)", criterion7},
        {8, "digraph gadget: soundness is reachability (200 DAGs)", criterion8},
        {9, "races vs oracle concurrency (500 sound, all pairs)", criterion9},
        {10, "data analyses on DATA1 / DATA1-ACYC", criterion10},
        {11, "performance sanity (10k nodes, 100 processes)", criterion11},
    };

    bool all = true;
    auto suite_start = clock_type::now();
    for (const auto& entry : entries) {
        auto t0 = clock_type::now();
        Criterion c;
        try {
            c = entry.run();
        } catch (const std::exception& e) {
            c.pass = false;
            c.log << "exception: " << e.what();
        }
        auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(clock_type::now() - t0)
                      .count();
        all = all && c.pass;
        std::printf("%s criterion %2d: %s (%lld ms)%s%s\n", c.pass ? "PASS" : "FAIL",
                    entry.number, entry.title, static_cast<long long>(ms),
                    c.log.str().empty() ? "" : " -- ", c.log.str().c_str());
        std::fflush(stdout);
    }
    auto total =
        std::chrono::duration_cast<std::chrono::seconds>(clock_type::now() - suite_start)
            .count();
    std::printf("%s acceptance suite (%lld s total)\n", all ? "PASS" : "FAIL",
                static_cast<long long>(total));
    return all ? 0 : 1;
}
