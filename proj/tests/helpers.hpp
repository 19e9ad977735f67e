#ifndef NEGO_TEST_HELPERS_HPP
#define NEGO_TEST_HELPERS_HPP

#include <string>

#include "nego/data.hpp"
#include "nego/model.hpp"
#include "nego/ngt.hpp"

namespace nego::test {

inline std::string fixture_path(const std::string& name) {
    return std::string(NEGO_FIXTURE_DIR) + "/" + name;
}

inline ParsedNgt load_fixture(const std::string& name) {
    NgtResult res = parse_ngt_file(fixture_path(name));
    if (!res.ok()) throw std::runtime_error(name + ": " + format_errors(res.errors));
    return std::move(*res.parsed);
}

inline Negotiation load(const std::string& name) { return load_fixture(name).data.base; }

inline DataNegotiation load_data(const std::string& name) {
    return load_fixture(name).data;
}

// Step sequence by node/result names, replayed from the initial configuration.
inline Run make_run(const Negotiation& neg, std::initializer_list<std::pair<const char*, const char*>> steps) {
    Run run;
    run.origin = initial_configuration(neg);
    for (const auto& [n, r] : steps) run.steps.push_back({neg.node_id(n), neg.result_id(r)});
    return run;
}

inline std::vector<Step> make_steps(const Negotiation& neg,
                                    std::initializer_list<std::pair<const char*, const char*>> steps) {
    std::vector<Step> out;
    for (const auto& [n, r] : steps) out.push_back({neg.node_id(n), neg.result_id(r)});
    return out;
}

}  // namespace nego::test

#endif
