#ifndef NEGO_CLI_HPP
#define NEGO_CLI_HPP

#include <iosfwd>

namespace nego {

// Exit codes: 0 sound/complies/no-race/run-found, 1 unsound/violates/race/
// no-run, 2 input error, 3 precondition unmet for a forced method.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nego

#endif
