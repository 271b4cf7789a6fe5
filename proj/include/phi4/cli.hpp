#pragma once

#include <iosfwd>

namespace phi4 {

/// Entry point of the phi4 tool. Subcommands: simulate, diagrams, besov-test, gronwall,
/// harness, version. Returns 0 on success, 1 on an experiment FAIL or a failed run,
/// 2 on usage and configuration errors.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace phi4
