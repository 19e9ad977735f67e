#ifndef NEGO_WEAK_HPP
#define NEGO_WEAK_HPP

#include <optional>
#include <string>
#include <variant>

#include "nego/games.hpp"
#include "nego/model.hpp"
#include "nego/patterns.hpp"

namespace nego {

// Unsoundness evidence for acyclic weakly non-deterministic negotiations:
// either the deterministic part is unsound, or the one-non-deterministic-
// process criterion produced a counterexample tuple.
struct DetPartUnsound {
    // Witness on the deterministic restriction; its indices refer to
    // restrict_processes(neg, deterministic_processes(neg)). For weakly
    // non-deterministic inputs the node set (and node order) coincide.
    AntiPatternWitness witness;
};

struct OneProcCounterexample {
    ProcIdx process;               // the non-deterministic process p
    NodeIdx m, n;                  // m before n in the topological order
    ResIdx a;                      // a in out(m)
    // b in out(n); empty when n is the final node without results: then the
    // deterministic part simply completes while p stays stranded below n_fin.
    std::optional<ResIdx> b;
    std::vector<NodeIdx> omitted;  // B = { n' in delta(m,a,p) : m < n' < n }
    // Successful run of N_D containing (m,a) (and (n,b) when b is real),
    // omitting B, written with the original negotiation's indices.
    std::vector<Step> run_steps;
};

using WeakWitness = std::variant<DetPartUnsound, OneProcCounterexample>;

struct WeakVerdict {
    bool sound = false;
    std::optional<ProcIdx> failing_process;  // in the original negotiation
    std::optional<WeakWitness> witness;
};

// Single-non-deterministic-process criterion. Preconditions: acyclic, weakly
// non-deterministic, exactly one non-deterministic process.
WeakVerdict check_single_nd(const Negotiation& neg);

// Same criterion with an explicitly designated process p; every other
// process must be deterministic. p itself may be deterministic (the search
// is then vacuously safe: its targets are singletons the run cannot dodge).
WeakVerdict check_single_nd(const Negotiation& neg, ProcIdx designated);

// PTIME soundness for acyclic weakly non-deterministic negotiations: N_D
// plus the per-process restrictions N^p.
WeakVerdict weak_soundness(const Negotiation& neg);

std::string render_weak_witness(const Negotiation& neg, const WeakWitness& witness);

}  // namespace nego

#endif
