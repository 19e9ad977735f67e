#include "doctest.h"

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "json.hpp"

namespace {

struct CliResult {
    int exit_code;
    std::string out;
    std::string err;
};

CliResult run(std::vector<std::string> args) {
    std::vector<const char*> argv{"negotool"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = nego::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string fx(const std::string& name) {
    return std::string(NEGO_FIXTURE_DIR) + "/" + name;
}

}  // namespace

TEST_CASE("check: verdicts, methods and exit codes") {
    auto sound = run({"check", fx("FIG1L.ngt")});
    CHECK(sound.exit_code == 0);
    CHECK(sound.out.find("sound") != std::string::npos);
    CHECK(sound.out.find("method patterns") != std::string::npos);

    auto unsound = run({"check", fx("FIG1R-MOD.ngt")});
    CHECK(unsound.exit_code == 1);
    CHECK(unsound.out.find("unsound") != std::string::npos);

    auto weak = run({"check", fx("FIG1M.ngt")});
    CHECK(weak.exit_code == 0);
    CHECK(weak.out.find("method weak") != std::string::npos);

    auto oracle = run({"check", fx("NODOM.ngt")});
    CHECK(oracle.exit_code == 0);
    CHECK(oracle.out.find("method oracle") != std::string::npos);
}

TEST_CASE("check: forced method on the wrong class exits 3") {
    auto res = run({"check", fx("FIG1M.ngt"), "--method", "patterns"});
    CHECK(res.exit_code == 3);

    auto res2 = run({"check", fx("FIG1L.ngt"), "--method", "game"});
    CHECK(res2.exit_code == 3);
}

TEST_CASE("check: input errors exit 2") {
    auto res = run({"check", "/nonexistent/file.ngt"});
    CHECK(res.exit_code == 2);
}

TEST_CASE("check --json emits a machine-readable report") {
    auto res = run({"check", fx("ANTI-F.ngt"), "--json"});
    CHECK(res.exit_code == 1);
    auto j = nlohmann::json::parse(res.out);
    CHECK(j["verdict"] == "unsound");
    CHECK(j["method"] == "patterns");
    CHECK(j["flags"]["deterministic"] == true);
    CHECK(j["witness"].get<std::string>().find("pattern F") != std::string::npos);
}

TEST_CASE("check --glob fans out over the fixture corpus") {
    auto res = run({"check", "--glob", std::string(NEGO_FIXTURE_DIR) + "/FIG1*.ngt"});
    CHECK(res.exit_code == 1);  // the batch contains unsound fixtures
    CHECK(std::count(res.out.begin(), res.out.end(), '\n') >= 5);
}

TEST_CASE("classify prints class flags") {
    auto res = run({"classify", fx("FIG1R.ngt")});
    CHECK(res.exit_code == 0);
    CHECK(res.out.find("very weakly non-deterministic") != std::string::npos);
}

TEST_CASE("omit answers inclusion/omission queries") {
    auto yes = run({"omit", fx("FIG1M.ngt"), "--include", "n2:a"});
    CHECK(yes.exit_code == 0);
    CHECK(yes.out.find("run found") != std::string::npos);

    auto no = run({"omit", fx("FIG1M.ngt"), "--include", "n2:a,n3:a"});
    CHECK(no.exit_code == 1);

    auto oracle = run({"omit", fx("FIG1L.ngt"), "--include", "n3:b"});
    CHECK(oracle.exit_code == 0);
    CHECK(oracle.out.find("method oracle") != std::string::npos);
}

TEST_CASE("race verdicts and exit codes") {
    auto no_race = run({"race", fx("FIG1L.ngt"), "n1", "n3"});
    CHECK(no_race.exit_code == 0);
    CHECK(no_race.out.find("no race") != std::string::npos);

    auto oracle_race = run({"race", fx("FIG1L.ngt"), "n1", "n2"});
    CHECK(oracle_race.exit_code == 1);
    CHECK(oracle_race.out.find("method oracle") != std::string::npos);
}

TEST_CASE("data subcommand reproduces the builtin analyses") {
    auto inconsistent = run({"data", fx("DATA1.ngt"), "--check", "inconsistent", "--var", "x2"});
    CHECK(inconsistent.exit_code == 1);
    CHECK(inconsistent.out.find("found") != std::string::npos);

    auto never = run({"data", fx("DATA1.ngt"), "--check", "never-destroyed", "--var", "x1"});
    CHECK(never.exit_code == 1);

    auto ok = run({"data", fx("DATA1.ngt"), "--check", "inconsistent", "--var", "x1"});
    CHECK(ok.exit_code == 0);

    auto unknown = run({"data", fx("DATA1.ngt"), "--check", "inconsistent", "--var", "zz"});
    CHECK(unknown.exit_code == 2);
}

TEST_CASE("data --spec consumes the three-line spec format") {
    std::string path = "/tmp/nego_test_spec.txt";
    {
        std::ofstream f(path);
        f << "O1: n3:b n4:a\n"
          << "O2: n5:a\n"
          << "O: n2:a n4:b n5:a\n";
    }
    auto res = run({"data", fx("DATA1-ACYC.ngt"), "--spec", path});
    CHECK(res.exit_code == 1);
    CHECK(res.out.find("violates") != std::string::npos);
}

TEST_CASE("gen produces parseable negotiations") {
    auto res = run({"gen", "--kind", "random", "--nodes", "7", "--procs", "2", "--seed", "5"});
    CHECK(res.exit_code == 0);
    CHECK(res.out.find("negotiation random") != std::string::npos);

    std::string dimacs = "/tmp/nego_test.cnf";
    {
        std::ofstream f(dimacs);
        f << "p cnf 1 1\n1 1 1 0\n";
    }
    auto cnf = run({"gen", "--kind", "cnf", "--dimacs", dimacs});
    CHECK(cnf.exit_code == 0);
    CHECK(cnf.out.find("ninit") != std::string::npos);

    std::string edges = "/tmp/nego_test.edges";
    {
        std::ofstream f(edges);
        f << "0 2\n2 1\n";
    }
    auto dg = run({"gen", "--kind", "digraph", "--edges", edges, "--source", "0", "--target",
                   "1"});
    CHECK(dg.exit_code == 0);
    CHECK(dg.out.find("back") != std::string::npos);
}

TEST_CASE("dot renders the graph with optional witness overlay") {
    auto res = run({"dot", fx("ANTI-C.ngt"), "--witness"});
    CHECK(res.exit_code == 0);
    CHECK(res.out.find("digraph") != std::string::npos);
    CHECK(res.out.find("color=red") != std::string::npos);

    auto hyper = run({"dot", fx("FIG1M.ngt")});
    CHECK(std::count(hyper.out.begin(), hyper.out.end(), '\n') > 10);
    CHECK(hyper.out.find("n0 -> n2 [label=\"p1:a\"]") != std::string::npos);
    CHECK(hyper.out.find("n0 -> n3 [label=\"p1:a\"]") != std::string::npos);

    auto reach = run({"dot", fx("FIG1R.ngt"), "--reach"});
    CHECK(reach.out.find("digraph reach") != std::string::npos);
}

TEST_CASE("-o writes the report to a file") {
    std::string path = "/tmp/nego_test_out.txt";
    auto res = run({"check", fx("FIG1L.ngt"), "-o", path});
    CHECK(res.exit_code == 0);
    std::ifstream f(path);
    std::stringstream buf;
    buf << f.rdbuf();
    CHECK(buf.str().find("sound") != std::string::npos);
}
