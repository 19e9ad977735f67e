#include "doctest.h"

#include "helpers.hpp"
#include "nego/generate.hpp"
#include "nego/graph.hpp"
#include "nego/reach.hpp"

using namespace nego;
using nego::test::load;
using nego::test::load_data;
using nego::test::make_run;
using nego::test::make_steps;

namespace {

Negotiation one_node() {
    RawNegotiation raw;
    raw.name = "single";
    raw.processes = {"p"};
    raw.init = raw.fin = "n";
    raw.nodes = {{"n", {"p"}}};
    return *validate(raw).negotiation;
}

bool steps_equal(const Run& run, const std::vector<Step>& steps) {
    return run.steps == steps;
}

}  // namespace

TEST_CASE("build_reach enumerates FIG1R's configurations") {
    Negotiation fig1r = load("FIG1R.ngt");
    ReachGraph graph(fig1r);
    CHECK(graph.size() == 5);

    bool superset_seen = false;
    for (uint32_t i = 0; i < graph.size(); ++i) {
        Configuration c = graph.configuration(i);
        if (c.ready[fig1r.proc_id("p0")] == std::vector<NodeIdx>{fig1r.node_id("n1")} &&
            c.ready[fig1r.proc_id("p1")] ==
                std::vector<NodeIdx>{fig1r.node_id("n2"), fig1r.node_id("n3")})
            superset_seen = true;
    }
    CHECK(superset_seen);

    // Every edge replays under step().
    for (const auto& e : graph.edges()) {
        Configuration from = graph.configuration(e.from);
        CHECK(step(fig1r, from, e.node, e.result) == graph.configuration(e.to));
    }
    CHECK(graph.initial() == 0);
    CHECK(graph.configuration(0) == initial_configuration(fig1r));
}

TEST_CASE("build_reach handles the degenerate single-node negotiation") {
    ReachGraph graph(one_node());
    CHECK(graph.size() == 1);
    CHECK(graph.terminal(0));
}

TEST_CASE("build_reach exposes FIG1L's (n4,b) cycle") {
    Negotiation fig1l = load("FIG1L.ngt");
    ReachGraph graph(fig1l);
    // Some (n4,b) edge leads back to an already-visited configuration.
    bool back = false;
    for (const auto& e : graph.edges())
        if (e.node == fig1l.node_id("n4") && e.result == fig1l.result_id("b"))
            back = back || e.to <= e.from;
    CHECK(back);
}

TEST_CASE("budget overruns raise BudgetExceeded") {
    Negotiation fig1l = load("FIG1L.ngt");
    CHECK_THROWS_AS(ReachGraph(fig1l, 2), BudgetExceeded);
}

TEST_CASE("oracle_sound on the shipped fixtures") {
    for (const char* name : {"FIG1L.ngt", "FIG1M.ngt", "FIG1R.ngt", "NODOM.ngt"})
        CHECK(oracle_sound(load(name)).sound);

    Negotiation mod = load("FIG1R-MOD.ngt");
    auto verdict = oracle_sound(mod);
    REQUIRE_FALSE(verdict.sound);
    CHECK(steps_equal(*verdict.witness, make_steps(mod, {{"n0", "a"}, {"n1", "b"}})));

    // ANTI-F can never terminate, so already the empty run is doomed; the
    // deadlock itself sits one step further.
    Negotiation antif = load("ANTI-F.ngt");
    auto vf = oracle_sound(antif);
    REQUIRE_FALSE(vf.sound);
    CHECK(vf.witness->steps.empty());
    auto after = step(antif, initial_configuration(antif), antif.node_id("n0"),
                      antif.result_id("a"));
    CHECK(is_deadlock(antif, after));

    CHECK_FALSE(oracle_sound(load("ANTI-C.ngt")).sound);
    CHECK_FALSE(oracle_sound(load("FIG1L-MOD.ngt")).sound);
}

TEST_CASE("oracle_omit finds inclusion/omission runs") {
    Negotiation mod = load("FIG1R-MOD.ngt");
    Negotiation nd = restrict_processes(mod, {mod.proc_id("p0")});

    OmitQuery q;
    q.include = {{nd.node_id("n0"), nd.result_id("a")}, {nd.node_id("n2"), nd.result_id("a")}};
    auto run = oracle_omit(nd, q);
    REQUIRE(run.has_value());
    CHECK(steps_equal(*run, make_steps(nd, {{"n0", "a"}, {"n1", "b"}, {"n2", "a"}})));

    // Two results of one node never occur together in an acyclic negotiation.
    OmitQuery q2;
    q2.include = {{nd.node_id("n1"), nd.result_id("a")}, {nd.node_id("n1"), nd.result_id("b")}};
    CHECK_FALSE(oracle_omit(nd, q2).has_value());

    OmitQuery q3;
    q3.omit_nodes = {nd.n_init};
    CHECK_FALSE(oracle_omit(nd, q3).has_value());
}

TEST_CASE("oracle_concurrent witnesses FIG1L's n1 / n2 and rejects shared domains") {
    Negotiation fig1l = load("FIG1L.ngt");
    auto c = oracle_concurrent(fig1l, fig1l.node_id("n1"), fig1l.node_id("n2"));
    REQUIRE(c.has_value());
    CHECK(c->ready[fig1l.proc_id("p0")] == std::vector<NodeIdx>{fig1l.node_id("n1")});
    CHECK(c->ready[fig1l.proc_id("p1")] == std::vector<NodeIdx>{fig1l.node_id("n2")});

    CHECK_FALSE(oracle_concurrent(fig1l, fig1l.node_id("n1"), fig1l.node_id("n3")).has_value());

    Negotiation data1 = load("DATA1.ngt");
    CHECK(oracle_concurrent(data1, data1.node_id("n2"), data1.node_id("n3")).has_value());
}

TEST_CASE("oracle_spec finds the DATA1 data violations") {
    DataNegotiation dneg = load_data("DATA1.ngt");
    const Negotiation& neg = dneg.base;

    SUBCASE("weakly redundant x2: written by (n3,b), deallocated by (n5,a)") {
        DataSpec spec;
        spec.name = "weakly-redundant(x2)";
        // O1 = writes of x2; O2 = fin or dealloc; O = reads/deallocs of x2.
        spec.o1 = {{neg.node_id("n3"), neg.result_id("b")},
                   {neg.node_id("n4"), neg.result_id("a")}};
        spec.o2 = {{neg.n_fin, dneg.fin_result()}};
        spec.o = {{neg.node_id("n2"), neg.result_id("a")},
                  {neg.node_id("n4"), neg.result_id("b")},
                  {neg.n_fin, dneg.fin_result()}};
        auto witness = oracle_spec(dneg, spec);
        REQUIRE(witness.has_value());
        CHECK(witness->first == NodeResult{neg.node_id("n3"), neg.result_id("b")});
        CHECK(witness->second == NodeResult{neg.n_fin, dneg.fin_result()});
        // The witness run replays to a terminal configuration.
        auto trace = replay(neg, witness->run);
        CHECK(is_terminal(neg, trace.back()));
    }

    SUBCASE("never destroyed x1: some run avoids (n4,b)") {
        DataSpec spec;
        spec.name = "never-destroyed(x1)";
        spec.o1 = {{neg.node_id("n0"), neg.result_id("a")}};
        spec.o2 = {{neg.n_fin, dneg.fin_result()}};
        spec.o = {{neg.node_id("n0"), neg.result_id("a")},
                  {neg.node_id("n4"), neg.result_id("b")},
                  {neg.n_fin, dneg.fin_result()}};
        auto witness = oracle_spec(dneg, spec);
        REQUIRE(witness.has_value());
        for (const Step& s : witness->run.steps)
            CHECK_FALSE((s.node == neg.node_id("n4") && s.result == neg.result_id("b")));
    }

    SUBCASE("empty O1 never violates") {
        DataSpec spec;
        spec.o2 = {{neg.n_fin, dneg.fin_result()}};
        CHECK_FALSE(oracle_spec(dneg, spec).has_value());
    }
}

TEST_CASE("realize_path realizes local paths of sound deterministic negotiations") {
    Negotiation fig1l = load("FIG1L.ngt");
    NegGraph g(fig1l);

    SUBCASE("the FIG1L path via p1 to n5") {
        std::vector<NegEdge> path{
            {fig1l.node_id("n0"), fig1l.proc_id("p1"), fig1l.result_id("a"),
             fig1l.node_id("n2")},
            {fig1l.node_id("n2"), fig1l.proc_id("p1"), fig1l.result_id("a"),
             fig1l.node_id("n4")},
            {fig1l.node_id("n4"), fig1l.proc_id("p0"), fig1l.result_id("a"),
             fig1l.node_id("n5")}};
        Run run = realize_path(fig1l, path, initial_configuration(fig1l));
        replay(fig1l, run);

        // The path's steps appear in order; interleavings avoid the pinned process.
        size_t at = 0;
        std::vector<size_t> positions;
        for (size_t i = 0; i < run.steps.size() && at < path.size(); ++i)
            if (run.steps[i].node == path[at].from && run.steps[i].result == path[at].result) {
                positions.push_back(i);
                ++at;
            }
        REQUIRE(at == path.size());
        for (size_t seg = 0; seg + 1 < positions.size(); ++seg)
            for (size_t i = positions[seg] + 1; i < positions[seg + 1]; ++i)
                CHECK_FALSE(fig1l.in_dom(run.steps[i].node, path[seg].process));

        // A longer interleaving realizes the same path; check it replays too.
        Run longer = make_run(fig1l, {{"n0", "a"}, {"n1", "a"}, {"n3", "a"}, {"n2", "a"},
                                      {"n4", "a"}});
        replay(fig1l, longer);
    }

    SUBCASE("single-edge path from an enabled node") {
        std::vector<NegEdge> path{{fig1l.node_id("n0"), fig1l.proc_id("p0"),
                                   fig1l.result_id("a"), fig1l.node_id("n1")}};
        Run run = realize_path(fig1l, path, initial_configuration(fig1l));
        CHECK(run.steps.size() == 1);
        CHECK(run.steps[0] == Step{fig1l.node_id("n0"), fig1l.result_id("a")});
    }

    SUBCASE("direct p0 chain") {
        std::vector<NegEdge> path{
            {fig1l.node_id("n0"), fig1l.proc_id("p0"), fig1l.result_id("a"),
             fig1l.node_id("n1")},
            {fig1l.node_id("n1"), fig1l.proc_id("p0"), fig1l.result_id("a"),
             fig1l.node_id("n3")}};
        Run run = realize_path(fig1l, path, initial_configuration(fig1l));
        CHECK(steps_equal(run, make_steps(fig1l, {{"n0", "a"}, {"n1", "a"}})));
    }
}

TEST_CASE("reorder_topologically yields an order-respecting equivalent run") {
    Negotiation fig1m = load("FIG1M.ngt");
    auto topo = std::get<TopoOrder>(topo_order(fig1m));

    SUBCASE("already ordered runs come back unchanged") {
        Run run = make_run(fig1m, {{"n0", "a"}, {"n1", "a"}, {"n2", "a"}});
        Run out = reorder_topologically(fig1m, run);
        CHECK(out.steps == run.steps);
    }

    SUBCASE("out-of-order disjoint steps get swapped") {
        Negotiation acyc = load("DATA1-ACYC.ngt");
        auto topo2 = std::get<TopoOrder>(topo_order(acyc));
        Run run = make_run(acyc, {{"n0", "a"}, {"n2", "a"}, {"n1", "a"}, {"n3", "b"},
                                  {"n4", "a"}});
        Run out = reorder_topologically(acyc, run);
        replay(acyc, out);
        for (size_t i = 0; i + 1 < out.steps.size(); ++i)
            CHECK(topo2.pos[out.steps[i].node] <= topo2.pos[out.steps[i + 1].node]);
        // Same multiset of steps.
        auto a = run.steps;
        auto b = out.steps;
        auto cmp = [](const Step& x, const Step& y) {
            return x.node != y.node ? x.node < y.node : x.result < y.result;
        };
        std::sort(a.begin(), a.end(), cmp);
        std::sort(b.begin(), b.end(), cmp);
        CHECK(a == b);
        // Same final configuration.
        CHECK(replay(acyc, run).back() == replay(acyc, out).back());
        CHECK(out.steps == make_steps(acyc, {{"n0", "a"}, {"n1", "a"}, {"n2", "a"},
                                             {"n3", "b"}, {"n4", "a"}}));
    }

    SUBCASE("invalid runs are rejected") {
        Run bad = make_run(fig1m, {{"n1", "a"}});
        CHECK_THROWS_AS(reorder_topologically(fig1m, bad), NegotiationError);
    }

    SUBCASE("cyclic negotiations are rejected") {
        Negotiation fig1l = load("FIG1L.ngt");
        Run run = make_run(fig1l, {{"n0", "a"}});
        CHECK_THROWS_AS(reorder_topologically(fig1l, run), PreconditionError);
    }
}

TEST_CASE("reach graph DOT dump renders configurations") {
    Negotiation fig1r = load("FIG1R.ngt");
    std::string dot = ReachGraph(fig1r).dot();
    CHECK(dot.find("digraph reach") != std::string::npos);
    CHECK(dot.find("n0/a") != std::string::npos);
}

TEST_CASE("acyclic soundness coincides with deadlock freedom") {
    // On inputs without infinite runs, unsound means exactly that some
    // deadlock is reachable.
    for (uint64_t seed = 1; seed <= 80; ++seed) {
        GenParams params;
        params.nodes = 4 + seed % 6;
        params.procs = 2 + seed % 3;
        params.acyclic = true;
        params.deterministic = seed % 2 == 0;
        params.weakly_nd = !params.deterministic;
        Negotiation neg;
        try {
            neg = gen_random(params, seed * 17 + 2);
        } catch (const BudgetExceeded&) {
            continue;
        }
        ReachGraph graph(neg);
        bool deadlock = false;
        for (uint32_t i = 0; i < graph.size(); ++i) deadlock = deadlock || graph.deadlock(i);
        CAPTURE(seed);
        CHECK(oracle_sound(graph).sound == !deadlock);
    }
}

TEST_CASE("spec witnesses satisfy the violation definition literally") {
    DataNegotiation dneg = load_data("DATA1.ngt");
    const Negotiation& neg = dneg.base;
    DataSpec spec;
    spec.name = "weakly-redundant(x2)";
    spec.o1 = {{neg.node_id("n3"), neg.result_id("b")}, {neg.node_id("n4"), neg.result_id("a")}};
    spec.o2 = {{neg.n_fin, dneg.fin_result()}};
    spec.o = {{neg.node_id("n2"), neg.result_id("a")},
              {neg.node_id("n4"), neg.result_id("b")},
              {neg.n_fin, dneg.fin_result()}};
    auto w = oracle_spec(dneg, spec);
    REQUIRE(w.has_value());
    REQUIRE(w->first_index < w->second_index);
    // Index i names the O1 step; index j is the virtual final step here.
    CHECK(w->run.steps[w->first_index] == Step{w->first.node, w->first.result});
    CHECK(w->second_index == w->run.steps.size());
    for (size_t l = w->first_index + 1; l < w->second_index && l < w->run.steps.size(); ++l)
        for (NodeResult o : spec.o)
            CHECK_FALSE((w->run.steps[l].node == o.node && w->run.steps[l].result == o.result));
    auto trace = replay(neg, w->run);
    CHECK(is_terminal(neg, trace.back()));
}

TEST_CASE("oracle_omit can exclude specific (node, result) pairs") {
    Negotiation fig1l = load("FIG1L.ngt");
    // Avoiding the pair (n3,a) forces the run through the (n3,b) loop first
    // or around it; the node n3 itself stays allowed.
    OmitQuery q;
    q.include = {{fig1l.node_id("n3"), fig1l.result_id("b")}};
    q.omit_pairs = {{fig1l.node_id("n4"), fig1l.result_id("b")}};
    auto run = oracle_omit(fig1l, q);
    REQUIRE(run.has_value());
    bool has_n3b = false;
    for (const Step& s : run->steps) {
        CHECK_FALSE((s.node == fig1l.node_id("n4") && s.result == fig1l.result_id("b")));
        has_n3b = has_n3b || (s.node == fig1l.node_id("n3") && s.result == fig1l.result_id("b"));
    }
    CHECK(has_n3b);

    // Omitting the only way into n_fin leaves nothing.
    OmitQuery q2;
    q2.omit_pairs = {{fig1l.node_id("n4"), fig1l.result_id("a")}};
    CHECK_FALSE(oracle_omit(fig1l, q2).has_value());
}
