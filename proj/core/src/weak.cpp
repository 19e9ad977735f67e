#include "nego/weak.hpp"

#include <algorithm>
#include <sstream>

namespace nego {

namespace {

// The per-process criterion (Lemma-1nd shape) with nd_proc designated; all
// other processes of neg must be deterministic.
WeakVerdict single_nd_core(const Negotiation& neg, ProcIdx nd_proc) {
    WeakVerdict verdict;

    std::vector<ProcIdx> det;
    for (ProcIdx p = 0; p < neg.process_count(); ++p)
        if (p != nd_proc) det.push_back(p);
    Negotiation nd = restrict_processes(neg, det);

    auto det_part = det_soundness(nd);
    if (!det_part.sound) {
        verdict.witness = WeakWitness{DetPartUnsound{*det_part.witness}};
        verdict.failing_process = nd_proc;
        return verdict;
    }

    OmitSolver solver(nd);
    auto topo_var = topo_order(neg);
    const TopoOrder& topo = std::get<TopoOrder>(topo_var);

    // Node names coincide between neg and its deterministic restriction
    // (weak non-determinism keeps the node set), but indices may not; map by
    // name once.
    std::vector<NodeIdx> to_nd(neg.node_count());
    for (NodeIdx n = 0; n < neg.node_count(); ++n) to_nd[n] = nd.node_id(neg.nodes[n]);
    std::vector<ResIdx> to_nd_res(neg.results.size(), kInvalidIdx);
    for (ResIdx r = 0; r < neg.results.size(); ++r) {
        for (ResIdx r2 = 0; r2 < nd.results.size(); ++r2)
            if (nd.results[r2] == neg.results[r]) to_nd_res[r] = r2;
    }

    for (uint32_t mi = 0; mi < topo.order.size(); ++mi) {
        NodeIdx m = topo.order[mi];
        if (!neg.in_dom(m, nd_proc)) continue;
        for (uint32_t ni = mi + 1; ni < topo.order.size(); ++ni) {
            NodeIdx n = topo.order[ni];
            if (!neg.in_dom(n, nd_proc)) continue;
            for (ResIdx a : neg.out[m]) {
                const auto& sp = neg.targets(m, a, nd_proc);
                if (std::binary_search(sp.begin(), sp.end(), n)) continue;
                // B = successors of (m,a,p) strictly between m and n.
                std::vector<NodeIdx> omitted;
                for (NodeIdx t : sp)
                    if (topo.pos[t] > topo.pos[m] && topo.pos[t] < topo.pos[n])
                        omitted.push_back(t);

                // Candidate results at n; a result-less n_fin stands for
                // "the deterministic part completes with p stranded". That
                // case must block every (m,a,p) successor, or a later move
                // could still bring p toward n_fin.
                std::vector<std::optional<ResIdx>> bs;
                if (n == neg.n_fin && neg.out[n].empty()) bs.push_back(std::nullopt);
                for (ResIdx b : neg.out[n]) bs.push_back(b);

                for (std::optional<ResIdx> b : bs) {
                    std::vector<NodeIdx> blocked = b ? omitted : std::vector<NodeIdx>(sp);
                    OmitInstance inst;
                    inst.include = {{to_nd[m], to_nd_res[a]}};
                    if (b) inst.include.push_back({to_nd[n], to_nd_res[*b]});
                    for (NodeIdx t : blocked) inst.omit_nodes.push_back(to_nd[t]);
                    auto plan = solver.solve(inst);
                    if (!plan) continue;
                    OneProcCounterexample cex;
                    cex.process = nd_proc;
                    cex.m = m;
                    cex.n = n;
                    cex.a = a;
                    cex.b = b;
                    cex.omitted = blocked;
                    for (const Step& s : plan->run.steps)
                        cex.run_steps.push_back({neg.node_id(nd.nodes[s.node]),
                                                 neg.result_id(nd.results[s.result])});
                    verdict.failing_process = nd_proc;
                    verdict.witness = WeakWitness{std::move(cex)};
                    return verdict;
                }
            }
        }
    }
    verdict.sound = true;
    return verdict;
}

}  // namespace

WeakVerdict check_single_nd(const Negotiation& neg) {
    ClassFlags flags = classify(neg);
    if (!flags.acyclic) throw PreconditionError("criterion needs an acyclic negotiation");
    if (!flags.weakly_nd)
        throw PreconditionError("criterion needs a weakly non-deterministic negotiation");
    std::vector<ProcIdx> nd_procs;
    for (ProcIdx p = 0; p < neg.process_count(); ++p)
        if (!is_process_deterministic(neg, p)) nd_procs.push_back(p);
    if (nd_procs.size() != 1)
        throw PreconditionError("criterion needs exactly one non-deterministic process, got " +
                                std::to_string(nd_procs.size()));
    return single_nd_core(neg, nd_procs[0]);
}

WeakVerdict check_single_nd(const Negotiation& neg, ProcIdx designated) {
    ClassFlags flags = classify(neg);
    if (!flags.acyclic) throw PreconditionError("criterion needs an acyclic negotiation");
    if (designated >= neg.process_count()) throw PreconditionError("unknown process");
    for (ProcIdx p = 0; p < neg.process_count(); ++p)
        if (p != designated && !is_process_deterministic(neg, p))
            throw PreconditionError(
                "every process but the designated one must be deterministic");
    return single_nd_core(neg, designated);
}

WeakVerdict weak_soundness(const Negotiation& neg) {
    ClassFlags flags = classify(neg);
    if (!flags.acyclic)
        throw PreconditionError("weak soundness needs an acyclic negotiation");
    if (!flags.weakly_nd)
        throw PreconditionError("weak soundness needs a weakly non-deterministic negotiation");

    std::vector<ProcIdx> det = deterministic_processes(neg);
    std::vector<ProcIdx> nd_procs;
    for (ProcIdx p = 0; p < neg.process_count(); ++p)
        if (!std::binary_search(det.begin(), det.end(), p)) nd_procs.push_back(p);

    if (nd_procs.empty()) {
        auto ds = det_soundness(neg);
        WeakVerdict verdict;
        verdict.sound = ds.sound;
        if (!ds.sound) verdict.witness = WeakWitness{DetPartUnsound{*ds.witness}};
        return verdict;
    }

    // N_D first, then each N^p.
    Negotiation nd = restrict_processes(neg, det);
    auto det_part = det_soundness(nd);
    if (!det_part.sound) {
        WeakVerdict verdict;
        verdict.witness = WeakWitness{DetPartUnsound{*det_part.witness}};
        return verdict;
    }

    for (ProcIdx p : nd_procs) {
        std::vector<ProcIdx> keep = det;
        keep.push_back(p);
        std::sort(keep.begin(), keep.end());
        Negotiation restricted = restrict_processes(neg, keep);
        ProcIdx p_in_restricted = restricted.proc_id(neg.processes[p]);
        WeakVerdict sub = single_nd_core(restricted, p_in_restricted);
        if (!sub.sound) {
            // Report in terms of the original negotiation's identifiers.
            WeakVerdict verdict;
            verdict.failing_process = p;
            if (auto* cex = std::get_if<OneProcCounterexample>(&*sub.witness)) {
                OneProcCounterexample mapped = *cex;
                mapped.process = p;
                mapped.m = neg.node_id(restricted.nodes[cex->m]);
                mapped.n = neg.node_id(restricted.nodes[cex->n]);
                mapped.a = neg.result_id(restricted.results[cex->a]);
                if (cex->b) mapped.b = neg.result_id(restricted.results[*cex->b]);
                std::vector<NodeIdx> omitted;
                for (NodeIdx t : cex->omitted) omitted.push_back(neg.node_id(restricted.nodes[t]));
                mapped.omitted = std::move(omitted);
                mapped.run_steps.clear();
                for (const Step& s : cex->run_steps)
                    mapped.run_steps.push_back({neg.node_id(restricted.nodes[s.node]),
                                                neg.result_id(restricted.results[s.result])});
                verdict.witness = WeakWitness{std::move(mapped)};
            } else {
                verdict.witness = sub.witness;
            }
            return verdict;
        }
    }
    WeakVerdict verdict;
    verdict.sound = true;
    return verdict;
}

std::string render_weak_witness(const Negotiation& neg, const WeakWitness& witness) {
    std::ostringstream os;
    if (const auto* d = std::get_if<DetPartUnsound>(&witness)) {
        os << "deterministic part unsound: " << render_witness(neg, d->witness);
        return os.str();
    }
    const auto& cex = std::get<OneProcCounterexample>(witness);
    os << "one-process criterion: p=" << neg.processes[cex.process] << ", (m,a)=("
       << neg.nodes[cex.m] << "," << neg.results[cex.a] << "), (n,b)=(" << neg.nodes[cex.n]
       << "," << (cex.b ? neg.results[*cex.b] : std::string("end")) << "), B={";
    for (size_t i = 0; i < cex.omitted.size(); ++i) {
        if (i) os << ",";
        os << neg.nodes[cex.omitted[i]];
    }
    os << "}, run of the deterministic part: ";
    for (const Step& s : cex.run_steps)
        os << "(" << neg.nodes[s.node] << "," << neg.results[s.result] << ")";
    return os.str();
}

}  // namespace nego
