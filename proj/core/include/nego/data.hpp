#ifndef NEGO_DATA_HPP
#define NEGO_DATA_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nego/model.hpp"
#include "nego/patterns.hpp"

namespace nego {

enum class DataOp { alloc, read, write, dealloc };

const char* data_op_name(DataOp op);
std::optional<DataOp> data_op_from_name(const std::string& s);

struct VarOp {
    DataOp op;
    uint32_t var;
    bool operator==(const VarOp& other) const { return op == other.op && var == other.var; }
    bool operator<(const VarOp& other) const {
        return op != other.op ? op < other.op : var < other.var;
    }
};

// A (node, result) pair; the result may be the virtual terminal result of n_fin.
struct NodeResult {
    NodeIdx node;
    ResIdx result;
    bool operator==(const NodeResult& other) const {
        return node == other.node && result == other.result;
    }
    bool operator<(const NodeResult& other) const {
        return node != other.node ? node < other.node : result < other.result;
    }
};

struct DataNegotiation {
    Negotiation base;
    std::vector<std::string> variables;
    // At most one operation per variable per pair (validated).
    std::map<NodeResult, std::vector<VarOp>> labels;

    uint32_t var_id(const std::string& name) const;
    const std::vector<VarOp>* label(NodeResult nr) const;

    // The result that stands for "the run completes": the declared terminal
    // result of n_fin when present, otherwise a synthetic "end" whose index
    // sits one past the base alphabet.
    ResIdx fin_result() const { return fin_result_; }
    bool fin_result_is_synthetic() const { return synthetic_fin_; }
    std::string result_name(ResIdx r) const {
        return synthetic_fin_ && r == fin_result_ ? "end" : base.results[r];
    }

    static DataNegotiation wrap(Negotiation neg);

    ResIdx fin_result_ = 0;
    bool synthetic_fin_ = false;
};

struct DataSpec {
    std::string name;
    std::vector<NodeResult> o1, o2, o;  // fixture order
};

// ---- Races ----------------------------------------------------------------

struct CoOccurrence {
    enum class Via { fork, path, none };
    Via via = Via::none;
    std::optional<Fork> fork;               // when via == fork
    std::vector<NegEdge> witness_path;      // when via == path: n_init ->* first ->* second
    bool yes() const { return via != Via::none; }
};

// Can some initial run contain both m and n? Requires deterministic + sound.
CoOccurrence co_occur(const Negotiation& neg, NodeIdx m, NodeIdx n);

struct RaceVerdict {
    enum class Reason { race, shared_domain, ordered_by_local_path, never_co_occur };
    Reason reason = Reason::shared_domain;
    std::optional<Fork> fork;  // when reason == race
    bool race() const { return reason == Reason::race; }
};

// m ∥ n for acyclic deterministic sound negotiations (the shared-domain
// answer needs no preconditions). Cyclic inputs belong to oracle_concurrent.
RaceVerdict race(const Negotiation& neg, NodeIdx m, NodeIdx n);

// ---- Data specifications ---------------------------------------------------

struct OmitPlan;  // from games.hpp

struct SpecViolation {
    NodeResult first;   // in O1
    NodeResult second;  // in O2
    Run run;            // successful run witnessing the violation
    std::string detail;
};

struct SpecVerdict {
    std::optional<SpecViolation> violation;
    bool complies() const { return !violation.has_value(); }
};

// Fast path (acyclic, deterministic, sound base): compliance via the
// pair-omitting reduction.
SpecVerdict spec_compliance(const DataNegotiation& dneg, const DataSpec& spec);

enum class BuiltinSpecKind { inconsistent, weakly_redundant, never_destroyed };

std::optional<BuiltinSpecKind> builtin_spec_kind_from_name(const std::string& s);
const char* builtin_spec_kind_name(BuiltinSpecKind kind);

// Encodes the builtin property for variable x as a DataSpec (the two
// triple-based kinds; inconsistent-data is race-based and has no triple).
DataSpec builtin_spec_triple(const DataNegotiation& dneg, BuiltinSpecKind kind, uint32_t x);

struct BuiltinAnalysis {
    bool holds = false;                     // property (a violation) found
    std::optional<NodeResult> first, second;
    std::optional<Run> witness;
    std::string method;  // "race", "oracle-concurrent", "omitting", "oracle-spec"
    std::string detail;
};

// Routes to the fast path on acyclic deterministic sound inputs and to the
// state-space oracle otherwise. budget caps oracle configurations.
BuiltinAnalysis builtin_spec(const DataNegotiation& dneg, BuiltinSpecKind kind, uint32_t x,
                             size_t budget = 1000000);

}  // namespace nego

#endif
