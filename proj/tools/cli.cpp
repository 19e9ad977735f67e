#include "cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "nego/data.hpp"
#include "nego/games.hpp"
#include "nego/generate.hpp"
#include "nego/graph.hpp"
#include "nego/model.hpp"
#include "nego/ngt.hpp"
#include "nego/patterns.hpp"
#include "nego/reach.hpp"
#include "nego/weak.hpp"

namespace nego {

namespace {

using nlohmann::json;

constexpr int kExitPositive = 0;   // sound / complies / no-race / run found
constexpr int kExitNegative = 1;   // unsound / violates / race / no run
constexpr int kExitInput = 2;      // bad input
constexpr int kExitPrecondition = 3;

struct Output {
    bool as_json = false;
    std::string to_file;
    std::ostream* out;

    void deliver(const std::string& text, const json& j) const {
        std::string payload = as_json ? j.dump(2) + "\n" : text;
        if (!to_file.empty()) {
            std::ofstream f(to_file);
            f << payload;
        } else {
            *out << payload;
        }
    }
};

json flags_json(const ClassFlags& f) {
    return json{{"deterministic", f.deterministic},
                {"weakly_nd", f.weakly_nd},
                {"very_weakly_nd", f.very_weakly_nd},
                {"acyclic", f.acyclic},
                {"det_acyclic", f.det_acyclic},
                {"all_nodes_locally_reachable", f.all_nodes_locally_reachable}};
}

std::string flags_text(const ClassFlags& f) {
    std::ostringstream os;
    os << (f.deterministic ? "deterministic" : "non-deterministic");
    if (!f.deterministic && f.weakly_nd) os << ", weakly non-deterministic";
    if (!f.deterministic && f.very_weakly_nd) os << ", very weakly non-deterministic";
    os << (f.acyclic ? ", acyclic" : ", cyclic");
    if (!f.acyclic && f.det_acyclic) os << ", det-acyclic";
    if (!f.all_nodes_locally_reachable) os << ", has locally unreachable nodes";
    return os.str();
}

std::string run_text(const Negotiation& neg, const Run& run) { return render_run(neg, run); }

struct CheckResult {
    int exit_code = kExitPositive;
    std::string text;
    json j;
};

CheckResult check_one(const std::string& path, const std::string& method, size_t budget) {
    CheckResult res;
    auto start = std::chrono::steady_clock::now();

    NgtResult parsed = parse_ngt_file(path);
    if (!parsed.ok()) {
        res.exit_code = kExitInput;
        res.text = path + ": input error\n" + format_errors(parsed.errors);
        res.j = json{{"file", path}, {"error", format_errors(parsed.errors)}, {"exit", 2}};
        return res;
    }
    const Negotiation& neg = parsed.parsed->negotiation();
    ClassFlags flags = classify(neg);

    std::string chosen = method;
    if (chosen == "auto") {
        if (flags.deterministic) chosen = "patterns";
        else if (flags.acyclic && flags.weakly_nd) chosen = "weak";
        else chosen = "oracle";
    }

    bool sound = false;
    std::string witness;
    try {
        if (chosen == "patterns") {
            if (!flags.deterministic)
                throw PreconditionError("method 'patterns' needs a deterministic negotiation");
            auto verdict = det_soundness(neg);
            sound = verdict.sound;
            if (verdict.witness) witness = render_witness(neg, *verdict.witness);
        } else if (chosen == "weak") {
            auto verdict = weak_soundness(neg);
            sound = verdict.sound;
            if (verdict.witness) witness = render_weak_witness(neg, *verdict.witness);
        } else if (chosen == "oracle") {
            auto verdict = oracle_sound(neg, budget);
            sound = verdict.sound;
            if (verdict.witness) witness = "run to doomed configuration: " +
                                           run_text(neg, *verdict.witness);
        } else {
            throw PreconditionError("method '" + chosen + "' does not decide soundness");
        }
    } catch (const PreconditionError& e) {
        res.exit_code = kExitPrecondition;
        res.text = path + ": precondition: " + e.what() + "\n";
        res.j = json{{"file", path}, {"error", e.what()}, {"exit", 3}};
        return res;
    } catch (const BudgetExceeded& e) {
        res.exit_code = kExitPrecondition;
        res.text = path + ": " + e.what() + "\n";
        res.j = json{{"file", path}, {"error", e.what()}, {"exit", 3}};
        return res;
    }

    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::steady_clock::now() - start)
                  .count();
    res.exit_code = sound ? kExitPositive : kExitNegative;
    std::ostringstream os;
    os << path << ": " << (sound ? "sound" : "unsound") << " (method " << chosen << "; "
       << flags_text(flags) << "; " << ms << " ms)\n";
    if (!witness.empty()) os << "  witness: " << witness << "\n";
    res.text = os.str();
    res.j = json{{"file", path},       {"verdict", sound ? "sound" : "unsound"},
                 {"method", chosen},   {"flags", flags_json(flags)},
                 {"witness", witness}, {"elapsed_ms", ms},
                 {"exit", res.exit_code}};
    return res;
}

std::vector<std::string> expand_glob(const std::string& pattern) {
    namespace fs = std::filesystem;
    fs::path p(pattern);
    fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
    std::string glob = p.filename().string();

    auto matches = [](const std::string& text, const std::string& pat) {
        // Simple backtracking *-? matcher.
        size_t t = 0, g = 0, star = std::string::npos, mark = 0;
        while (t < text.size()) {
            if (g < pat.size() && (pat[g] == '?' || pat[g] == text[t])) {
                ++t, ++g;
            } else if (g < pat.size() && pat[g] == '*') {
                star = g++;
                mark = t;
            } else if (star != std::string::npos) {
                g = star + 1;
                t = ++mark;
            } else {
                return false;
            }
        }
        while (g < pat.size() && pat[g] == '*') ++g;
        return g == pat.size();
    };

    std::vector<std::string> files;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(dir, ec))
        if (entry.is_regular_file() && matches(entry.path().filename().string(), glob))
            files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    return files;
}

std::optional<NodeResult> parse_pair(const DataNegotiation& dneg, const std::string& token) {
    const Negotiation& neg = dneg.base;
    auto colon = token.find(':');
    if (colon == std::string::npos) return std::nullopt;
    std::string n = token.substr(0, colon), r = token.substr(colon + 1);
    try {
        NodeIdx node = neg.node_id(n);
        if (node == neg.n_fin && dneg.result_name(dneg.fin_result()) == r)
            return NodeResult{node, dneg.fin_result()};
        for (ResIdx ri = 0; ri < neg.results.size(); ++ri)
            if (neg.results[ri] == r) return NodeResult{node, ri};
    } catch (const std::out_of_range&) {
    }
    return std::nullopt;
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) parts.push_back(cur);
    return parts;
}

std::optional<DataSpec> load_spec_file(const DataNegotiation& dneg, const std::string& path,
                                       std::string& error) {
    std::ifstream in(path);
    if (!in) {
        error = "cannot open '" + path + "'";
        return std::nullopt;
    }
    DataSpec spec;
    spec.name = path;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string head;
        if (!(ls >> head)) continue;
        if (head[0] == '#') continue;
        std::vector<NodeResult>* dst = nullptr;
        if (head == "O1:") dst = &spec.o1;
        else if (head == "O2:") dst = &spec.o2;
        else if (head == "O:") dst = &spec.o;
        else {
            error = "line " + std::to_string(lineno) + ": expected O1:, O2: or O:";
            return std::nullopt;
        }
        std::string token;
        while (ls >> token) {
            auto nr = parse_pair(dneg, token);
            if (!nr) {
                error = "line " + std::to_string(lineno) + ": bad pair '" + token + "'";
                return std::nullopt;
            }
            dst->push_back(*nr);
        }
    }
    return spec;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"static analysis for negotiation diagrams"};
    app.require_subcommand(1);

    std::string method = "auto";
    size_t budget = ReachGraph::kDefaultBudget;
    uint64_t seed = 1;
    bool as_json = false;
    std::string out_file;

    app.add_option("--method", method)
        ->check(CLI::IsMember({"auto", "patterns", "game", "weak", "oracle", "fast"}));
    app.add_option("--budget", budget);
    app.add_option("--seed", seed);
    app.add_flag("--json", as_json);
    app.add_option("-o", out_file);

    // check
    auto* check = app.add_subcommand("check", "decide soundness");
    std::vector<std::string> check_files;
    std::string check_glob;
    check->add_option("files", check_files);
    check->add_option("--glob", check_glob);

    // classify
    auto* cls = app.add_subcommand("classify", "report class flags");
    std::string cls_file;
    cls->add_option("file", cls_file)->required();

    // omit
    auto* omit = app.add_subcommand("omit", "successful run including P, omitting B");
    std::string omit_file, omit_include, omit_nodes, omit_pairs;
    omit->add_option("file", omit_file)->required();
    omit->add_option("--include", omit_include);
    omit->add_option("--omit", omit_nodes);
    omit->add_option("--omit-pairs", omit_pairs);

    // race
    auto* race_cmd = app.add_subcommand("race", "can two nodes race?");
    std::string race_file, race_m, race_n;
    race_cmd->add_option("file", race_file)->required();
    race_cmd->add_option("m", race_m)->required();
    race_cmd->add_option("n", race_n)->required();

    // data
    auto* data_cmd = app.add_subcommand("data", "data-flow analyses");
    std::string data_file, data_check, data_var, data_spec_file;
    data_cmd->add_option("file", data_file)->required();
    data_cmd->add_option("--check", data_check)
        ->check(CLI::IsMember({"inconsistent", "weakly-redundant", "never-destroyed"}));
    data_cmd->add_option("--var", data_var);
    data_cmd->add_option("--spec", data_spec_file);

    // gen
    auto* gen = app.add_subcommand("gen", "generate negotiations");
    std::string gen_kind = "random", gen_dimacs, gen_edges;
    uint32_t gen_nodes = 8, gen_procs = 2, gen_results = 2, gen_source = 0, gen_target = 1;
    bool gen_cyclic = false, gen_nondet = false, gen_weakly = false, gen_workflow = false;
    gen->add_option("--kind", gen_kind)
        ->check(CLI::IsMember({"random", "cnf", "digraph", "workflow"}));
    gen->add_option("--nodes", gen_nodes);
    gen->add_option("--procs", gen_procs);
    gen->add_option("--max-results", gen_results);
    gen->add_flag("--cyclic", gen_cyclic);
    gen->add_flag("--nondet", gen_nondet);
    gen->add_flag("--weakly", gen_weakly);
    gen->add_flag("--workflow", gen_workflow);
    gen->add_option("--dimacs", gen_dimacs);
    gen->add_option("--edges", gen_edges);
    gen->add_option("--source", gen_source);
    gen->add_option("--target", gen_target);

    // dot
    auto* dot = app.add_subcommand("dot", "DOT export");
    std::string dot_file;
    bool dot_witness = false, dot_reach = false;
    dot->add_option("file", dot_file)->required();
    dot->add_flag("--witness", dot_witness);
    dot->add_flag("--reach", dot_reach);

    // Global flags may follow the subcommand name.
    for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << e.what() << "\n";
        return kExitInput;
    }

    Output output{as_json, out_file, &out};

    auto load = [&](const std::string& path, ParsedNgt& into) -> bool {
        NgtResult parsed = parse_ngt_file(path);
        if (!parsed.ok()) {
            err << path << ": input error\n" << format_errors(parsed.errors);
            return false;
        }
        into = std::move(*parsed.parsed);
        return true;
    };

    try {
        if (*check) {
            std::vector<std::string> files = check_files;
            if (!check_glob.empty()) {
                auto expanded = expand_glob(check_glob);
                files.insert(files.end(), expanded.begin(), expanded.end());
            }
            if (files.empty()) {
                err << "check: no input files\n";
                return kExitInput;
            }
            std::vector<CheckResult> results(files.size());
            if (files.size() > 1) {
                std::vector<std::future<CheckResult>> futures;
                for (const auto& f : files)
                    futures.push_back(std::async(std::launch::async, check_one, f, method,
                                                 budget));
                for (size_t i = 0; i < futures.size(); ++i) results[i] = futures[i].get();
            } else {
                results[0] = check_one(files[0], method, budget);
            }
            int exit_code = 0;
            std::string text;
            json j = json::array();
            for (const auto& r : results) {
                exit_code = std::max(exit_code, r.exit_code);
                text += r.text;
                j.push_back(r.j);
            }
            output.deliver(text, files.size() == 1 ? results[0].j : j);
            return exit_code;
        }

        if (*cls) {
            ParsedNgt parsed;
            if (!load(cls_file, parsed)) return kExitInput;
            ClassFlags flags = classify(parsed.negotiation());
            output.deliver(cls_file + ": " + flags_text(flags) + "\n",
                           json{{"file", cls_file}, {"flags", flags_json(flags)}});
            return kExitPositive;
        }

        if (*omit) {
            ParsedNgt parsed;
            if (!load(omit_file, parsed)) return kExitInput;
            const Negotiation& neg = parsed.negotiation();
            OmitInstance inst;
            OmitQuery query;
            for (const auto& tok : split_commas(omit_include)) {
                auto nr = parse_pair(parsed.data, tok);
                if (!nr) {
                    err << "omit: bad include pair '" << tok << "'\n";
                    return kExitInput;
                }
                inst.include.push_back({nr->node, nr->result});
                query.include.push_back(*nr);
            }
            for (const auto& tok : split_commas(omit_nodes)) {
                try {
                    inst.omit_nodes.push_back(neg.node_id(tok));
                } catch (const std::out_of_range&) {
                    err << "omit: unknown node '" << tok << "'\n";
                    return kExitInput;
                }
                query.omit_nodes.push_back(neg.node_id(tok));
            }
            for (const auto& tok : split_commas(omit_pairs)) {
                auto nr = parse_pair(parsed.data, tok);
                if (!nr) {
                    err << "omit: bad omit pair '" << tok << "'\n";
                    return kExitInput;
                }
                inst.omit_pairs.push_back({nr->node, nr->result});
                query.omit_pairs.push_back(*nr);
            }

            std::string chosen = method;
            ClassFlags flags = classify(neg);
            if (chosen == "auto")
                chosen = flags.deterministic && flags.acyclic ? "game" : "oracle";
            std::optional<Run> run;
            std::string plan_text;
            if (chosen == "game") {
                auto plan = solve_omitting(neg, inst);
                if (plan) {
                    run = plan->run;
                    plan_text = render_plan(neg, *plan);
                }
            } else if (chosen == "oracle") {
                run = oracle_omit(neg, query, budget);
                if (run) plan_text = "run: " + run_text(neg, *run);
            } else {
                err << "omit: method must be auto, game or oracle\n";
                return kExitPrecondition;
            }
            json j{{"file", omit_file},
                   {"method", chosen},
                   {"found", run.has_value()},
                   {"run", run ? run_text(neg, *run) : ""}};
            output.deliver(omit_file + ": " + (run ? "run found (" + plan_text + ")" : "no run") +
                               " (method " + chosen + ")\n",
                           j);
            return run ? kExitPositive : kExitNegative;
        }

        if (*race_cmd) {
            ParsedNgt parsed;
            if (!load(race_file, parsed)) return kExitInput;
            const Negotiation& neg = parsed.negotiation();
            NodeIdx m, n;
            try {
                m = neg.node_id(race_m);
                n = neg.node_id(race_n);
            } catch (const std::out_of_range&) {
                err << "race: unknown node\n";
                return kExitInput;
            }
            std::string chosen = method;
            ClassFlags flags = classify(neg);
            if (chosen == "auto")
                chosen = flags.deterministic && flags.acyclic ? "fast" : "oracle";
            bool has_race = false;
            std::string detail;
            if (chosen == "fast") {
                RaceVerdict verdict = race(neg, m, n);
                has_race = verdict.race();
                switch (verdict.reason) {
                    case RaceVerdict::Reason::race: detail = "concurrently enabled"; break;
                    case RaceVerdict::Reason::shared_domain: detail = "shared domain"; break;
                    case RaceVerdict::Reason::ordered_by_local_path:
                        detail = "ordered by a local path";
                        break;
                    case RaceVerdict::Reason::never_co_occur:
                        detail = "never in one run";
                        break;
                }
            } else {
                auto config = oracle_concurrent(neg, m, n, budget);
                has_race = config.has_value();
                detail = has_race ? "concurrently enabled at " +
                                        render_configuration(neg, *config)
                                  : "no reachable configuration enables both";
            }
            json j{{"file", race_file}, {"m", race_m},       {"n", race_n},
                   {"race", has_race},  {"method", chosen},  {"detail", detail}};
            output.deliver(race_file + ": " + (has_race ? "race" : "no race") + " between " +
                               race_m + " and " + race_n + " (" + detail + "; method " +
                               chosen + ")\n",
                           j);
            return has_race ? kExitNegative : kExitPositive;
        }

        if (*data_cmd) {
            ParsedNgt parsed;
            if (!load(data_file, parsed)) return kExitInput;
            const DataNegotiation& dneg = parsed.data;
            if (!data_spec_file.empty()) {
                std::string error;
                auto spec = load_spec_file(dneg, data_spec_file, error);
                if (!spec) {
                    err << "data: " << error << "\n";
                    return kExitInput;
                }
                ClassFlags flags = classify(dneg.base);
                bool violated;
                std::string detail;
                if (flags.deterministic && flags.acyclic && method != "oracle") {
                    auto verdict = spec_compliance(dneg, *spec);
                    violated = !verdict.complies();
                    if (violated) detail = verdict.violation->detail;
                } else {
                    auto witness = oracle_spec(dneg, *spec, budget);
                    violated = witness.has_value();
                    if (violated)
                        detail = "violated at (" + dneg.base.nodes[witness->first.node] + "," +
                                 dneg.result_name(witness->first.result) + ") then (" +
                                 dneg.base.nodes[witness->second.node] + "," +
                                 dneg.result_name(witness->second.result) + ")";
                }
                json j{{"file", data_file},
                       {"spec", data_spec_file},
                       {"violated", violated},
                       {"detail", detail}};
                output.deliver(data_file + ": " + (violated ? "violates" : "complies") + " " +
                                   data_spec_file + (detail.empty() ? "" : " (" + detail + ")") +
                                   "\n",
                               j);
                return violated ? kExitNegative : kExitPositive;
            }
            if (data_check.empty() || data_var.empty()) {
                err << "data: need --check <kind> --var <x> or --spec <file>\n";
                return kExitInput;
            }
            auto kind = builtin_spec_kind_from_name(data_check);
            uint32_t var;
            try {
                var = dneg.var_id(data_var);
            } catch (const std::out_of_range& e) {
                err << "data: " << e.what() << "\n";
                return kExitInput;
            }
            BuiltinAnalysis res = builtin_spec(dneg, *kind, var, budget);
            json j{{"file", data_file},   {"check", data_check}, {"var", data_var},
                   {"found", res.holds},  {"method", res.method}, {"detail", res.detail}};
            if (res.witness) j["witness"] = run_text(dneg.base, *res.witness);
            output.deliver(data_file + ": " + data_check + "(" + data_var + ") " +
                               (res.holds ? "found" : "not found") + " (method " + res.method +
                               ")" + (res.detail.empty() ? "" : "\n  " + res.detail) + "\n",
                           j);
            return res.holds ? kExitNegative : kExitPositive;
        }

        if (*gen) {
            Negotiation neg;
            if (gen_kind == "cnf") {
                std::ifstream in(gen_dimacs);
                if (!in) {
                    err << "gen: cannot open '" << gen_dimacs << "'\n";
                    return kExitInput;
                }
                std::ostringstream buf;
                buf << in.rdbuf();
                neg = gen_from_cnf(parse_dimacs(buf.str()));
            } else if (gen_kind == "digraph") {
                std::ifstream in(gen_edges);
                if (!in) {
                    err << "gen: cannot open '" << gen_edges << "'\n";
                    return kExitInput;
                }
                Digraph g;
                uint32_t u, v;
                while (in >> u >> v) {
                    g.edges.push_back({u, v});
                    g.vertex_count = std::max({g.vertex_count, u + 1, v + 1});
                }
                g.vertex_count = std::max({g.vertex_count, gen_source + 1, gen_target + 1});
                neg = gen_from_digraph(g, gen_source, gen_target);
            } else if (gen_kind == "workflow" || gen_workflow) {
                neg = gen_sound_workflow(gen_nodes, gen_procs, seed);
            } else {
                GenParams params;
                params.nodes = gen_nodes;
                params.procs = gen_procs;
                params.max_results = gen_results;
                params.acyclic = !gen_cyclic;
                params.deterministic = !gen_nondet;
                params.weakly_nd = gen_weakly;
                neg = gen_random(params, seed);
            }
            std::string text = emit_ngt(neg);
            output.deliver(text, json{{"ngt", text}});
            return kExitPositive;
        }

        if (*dot) {
            ParsedNgt parsed;
            if (!load(dot_file, parsed)) return kExitInput;
            const Negotiation& neg = parsed.negotiation();
            std::string text;
            if (dot_reach) {
                text = ReachGraph(neg, budget).dot();
            } else {
                std::vector<NegEdge> highlights;
                if (dot_witness) {
                    ClassFlags flags = classify(neg);
                    if (flags.deterministic) {
                        auto verdict = det_soundness(neg);
                        if (verdict.witness) highlights = witness_edges(neg, *verdict.witness);
                    }
                }
                text = graph_dot(NegGraph(neg), highlights);
            }
            output.deliver(text, json{{"dot", text}});
            return kExitPositive;
        }
    } catch (const PreconditionError& e) {
        err << "precondition: " << e.what() << "\n";
        return kExitPrecondition;
    } catch (const BudgetExceeded& e) {
        err << e.what() << "\n";
        return kExitPrecondition;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}

}  // namespace nego
