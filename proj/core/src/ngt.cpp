#include "nego/ngt.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace nego {

namespace {

bool valid_ident(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    return true;
}

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : line) {
        if (c == '#') break;
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) tokens.push_back(std::move(cur));
            cur.clear();
        } else if (c == ';' || c == ':' || c == '{' || c == '}') {
            if (!cur.empty()) tokens.push_back(std::move(cur));
            cur.clear();
            tokens.push_back(std::string(1, c));
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

struct RawLabel {
    int line;
    std::string node, result;
    std::vector<std::pair<std::string, std::string>> ops;  // (op, var)
};

}  // namespace

NgtResult parse_ngt(const std::string& text) {
    NgtResult res;
    RawNegotiation raw;
    std::vector<RawLabel> labels;

    auto fail = [&](int line, const std::string& msg) { res.errors.push_back({line, msg}); };

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool saw_header = false;
    std::vector<std::string> seen_nodes;

    while (std::getline(in, line)) {
        ++lineno;
        auto tokens = tokenize(line);
        if (tokens.empty()) continue;
        const std::string& kw = tokens[0];

        if (kw == "negotiation") {
            if (tokens.size() != 2 || !valid_ident(tokens[1])) {
                fail(lineno, "expected: negotiation <name>");
                continue;
            }
            if (saw_header) fail(lineno, "duplicate negotiation line");
            saw_header = true;
            raw.name = tokens[1];
        } else if (kw == "processes") {
            if (tokens.size() < 2) {
                fail(lineno, "expected: processes <p>...");
                continue;
            }
            for (size_t i = 1; i < tokens.size(); ++i) {
                if (!valid_ident(tokens[i])) fail(lineno, "bad process id '" + tokens[i] + "'");
                raw.processes.push_back(tokens[i]);
            }
        } else if (kw == "init") {
            // init <node> ; fin <node>
            if (tokens.size() != 5 || tokens[2] != ";" || tokens[3] != "fin") {
                fail(lineno, "expected: init <node> ; fin <node>");
                continue;
            }
            raw.init = tokens[1];
            raw.fin = tokens[4];
        } else if (kw == "node") {
            if (tokens.size() < 4 || tokens[2] != "{" || tokens.back() != "}") {
                fail(lineno, "expected: node <id> { <p>... }");
                continue;
            }
            if (std::find(seen_nodes.begin(), seen_nodes.end(), tokens[1]) != seen_nodes.end()) {
                fail(lineno, "duplicate node declaration '" + tokens[1] + "'");
                continue;
            }
            seen_nodes.push_back(tokens[1]);
            RawNegotiation::Node n;
            n.id = tokens[1];
            for (size_t i = 3; i + 1 < tokens.size(); ++i) n.domain.push_back(tokens[i]);
            raw.nodes.push_back(std::move(n));
        } else if (kw == "out") {
            if (tokens.size() < 3 || tokens[2] != ":") {
                fail(lineno, "expected: out <id> : <r>...");
                continue;
            }
            RawNegotiation::Out o;
            o.node = tokens[1];
            for (size_t i = 3; i < tokens.size(); ++i) o.results.push_back(tokens[i]);
            raw.outs.push_back(std::move(o));
        } else if (kw == "arc") {
            // arc <id> <r> <p> -> <id> [<id>...]
            if (tokens.size() < 6 || tokens[4] != "->") {
                fail(lineno, "expected: arc <id> <r> <p> -> <id>...");
                continue;
            }
            RawNegotiation::Arc a;
            a.node = tokens[1];
            a.result = tokens[2];
            a.process = tokens[3];
            for (size_t i = 5; i < tokens.size(); ++i) a.targets.push_back(tokens[i]);
            raw.arcs.push_back(std::move(a));
        } else if (kw == "label") {
            // label <id> <r> : <op> <var> [...]
            if (tokens.size() < 6 || tokens[3] != ":" || (tokens.size() - 4) % 2 != 0) {
                fail(lineno, "expected: label <id> <r> : <op> <var> [<op> <var>]...");
                continue;
            }
            RawLabel l;
            l.line = lineno;
            l.node = tokens[1];
            l.result = tokens[2];
            for (size_t i = 4; i + 1 < tokens.size(); i += 2)
                l.ops.push_back({tokens[i], tokens[i + 1]});
            labels.push_back(std::move(l));
        } else {
            fail(lineno, "unknown directive '" + kw + "'");
        }
    }

    if (!saw_header) fail(0, "missing negotiation line");
    if (raw.init.empty()) fail(0, "missing init/fin line");
    if (!res.errors.empty()) return res;

    ValidateResult vr = validate(raw);
    if (!vr.ok()) {
        for (const auto& e : vr.errors) res.errors.push_back({0, e});
        return res;
    }

    ParsedNgt parsed;
    parsed.data = DataNegotiation::wrap(std::move(*vr.negotiation));
    const Negotiation& neg = parsed.data.base;

    for (const RawLabel& l : labels) {
        parsed.has_labels = true;
        NodeIdx n;
        try {
            n = neg.node_id(l.node);
        } catch (const std::out_of_range&) {
            fail(l.line, "label: unknown node '" + l.node + "'");
            continue;
        }
        ResIdx r = kInvalidIdx;
        for (ResIdx ri = 0; ri < neg.results.size(); ++ri)
            if (neg.results[ri] == l.result) r = ri;
        bool is_virtual = neg.fin_terminal_result && n == neg.n_fin &&
                          r == *neg.fin_terminal_result;
        if (r == kInvalidIdx || (!neg.has_result(n, r) && !is_virtual)) {
            fail(l.line, "label: result '" + l.result + "' not declared on '" + l.node + "'");
            continue;
        }
        NodeResult nr{n, r};
        auto& ops = parsed.data.labels[nr];
        for (const auto& [opname, varname] : l.ops) {
            auto op = data_op_from_name(opname);
            if (!op) {
                fail(l.line, "label: unknown operation '" + opname + "'");
                continue;
            }
            uint32_t var = kInvalidIdx;
            for (uint32_t vi = 0; vi < parsed.data.variables.size(); ++vi)
                if (parsed.data.variables[vi] == varname) var = vi;
            if (var == kInvalidIdx) {
                var = static_cast<uint32_t>(parsed.data.variables.size());
                parsed.data.variables.push_back(varname);
            }
            for (const VarOp& existing : ops)
                if (existing.var == var)
                    fail(l.line, "label: more than one operation on '" + varname + "' at (" +
                                     l.node + "," + l.result + ")");
            ops.push_back({*op, var});
        }
    }
    if (!res.errors.empty()) return res;

    // Resolve the fin result used by data specifications.
    if (neg.fin_terminal_result) {
        parsed.data.fin_result_ = *neg.fin_terminal_result;
        parsed.data.synthetic_fin_ = false;
    }

    res.parsed = std::move(parsed);
    return res;
}

NgtResult parse_ngt_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        NgtResult res;
        res.errors.push_back({0, "cannot open '" + path + "'"});
        return res;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_ngt(buf.str());
}

namespace {

void emit_base(std::ostringstream& os, const Negotiation& neg) {
    os << "negotiation " << (neg.name.empty() ? "unnamed" : neg.name) << "\n";
    os << "processes";
    for (const auto& p : neg.processes) os << " " << p;
    os << "\n";
    os << "init " << neg.nodes[neg.n_init] << " ; fin " << neg.nodes[neg.n_fin] << "\n";
    for (NodeIdx n = 0; n < neg.node_count(); ++n) {
        os << "node " << neg.nodes[n] << " {";
        for (ProcIdx p : neg.dom[n]) os << " " << neg.processes[p];
        os << " }\n";
    }
    for (NodeIdx n = 0; n < neg.node_count(); ++n) {
        bool terminal_here = neg.fin_terminal_result && n == neg.n_fin;
        if (neg.out[n].empty() && !terminal_here) continue;
        os << "out " << neg.nodes[n] << " :";
        for (ResIdx r : neg.out[n]) os << " " << neg.results[r];
        if (terminal_here) os << " " << neg.results[*neg.fin_terminal_result];
        os << "\n";
    }
    for (NodeIdx n = 0; n < neg.node_count(); ++n)
        for (uint32_t oi = 0; oi < neg.out[n].size(); ++oi)
            for (uint32_t di = 0; di < neg.dom[n].size(); ++di) {
                os << "arc " << neg.nodes[n] << " " << neg.results[neg.out[n][oi]] << " "
                   << neg.processes[neg.dom[n][di]] << " ->";
                for (NodeIdx t : neg.delta[n][oi][di]) os << " " << neg.nodes[t];
                os << "\n";
            }
}

}  // namespace

std::string emit_ngt(const Negotiation& neg) {
    std::ostringstream os;
    emit_base(os, neg);
    return os.str();
}

std::string emit_ngt(const DataNegotiation& dneg) {
    std::ostringstream os;
    emit_base(os, dneg.base);
    for (const auto& [nr, ops] : dneg.labels) {
        os << "label " << dneg.base.nodes[nr.node] << " " << dneg.base.results[nr.result]
           << " :";
        for (const VarOp& vo : ops)
            os << " " << data_op_name(vo.op) << " " << dneg.variables[vo.var];
        os << "\n";
    }
    return os.str();
}

std::string format_errors(const std::vector<ParseError>& errors) {
    std::ostringstream os;
    for (const auto& e : errors) {
        if (e.line > 0) os << "line " << e.line << ": ";
        os << e.message << "\n";
    }
    return os.str();
}

}  // namespace nego
