#ifndef NEGO_GENERATE_HPP
#define NEGO_GENERATE_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "nego/model.hpp"

namespace nego {

// 3-CNF formula: clauses of exactly three literals; literal = signed variable
// index (1-based), negative for negation. Repeated literals are allowed.
struct Cnf3 {
    uint32_t variable_count = 0;
    std::vector<std::array<int, 3>> clauses;
};

bool cnf_valid(const Cnf3& f);
bool cnf_satisfiable(const Cnf3& f);  // brute force over assignments

Cnf3 parse_dimacs(const std::string& text);

// The hardness gadget: phi satisfiable iff the negotiation is not sound.
// Det-acyclic, very weakly non-deterministic, cyclic.
Negotiation gen_from_cnf(const Cnf3& f);

// One-process negotiation from a digraph: sound iff t is reachable from s.
// s must have no incoming and t no outgoing edges.
struct Digraph {
    uint32_t vertex_count = 0;
    std::vector<std::pair<uint32_t, uint32_t>> edges;
};

Negotiation gen_from_digraph(const Digraph& g, uint32_t s, uint32_t t);

struct GenParams {
    uint32_t nodes = 6;
    uint32_t procs = 2;
    uint32_t max_results = 2;
    bool acyclic = true;
    bool deterministic = true;
    bool weakly_nd = false;
};

// Reproducible pseudo-random negotiation with exactly the requested class
// flags; throws BudgetExceeded if rejection sampling cannot satisfy them.
Negotiation gen_random(const GenParams& params, uint64_t seed);

// Series-parallel (fork/join) workflow: deterministic, acyclic and sound by
// construction. Used for scale testing.
Negotiation gen_sound_workflow(uint32_t nodes, uint32_t procs, uint64_t seed);

}  // namespace nego

#endif
