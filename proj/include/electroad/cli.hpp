#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace electroad {

/// Exit codes of the command-line front end.
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,       // analysis failure other than those below (trace stall, I/O, ...)
    kExitSchema = 2,        // bad arguments, scenario schema or unit errors
    kExitNonConvergence = 3 // a profile step had no converged solution
};

/// Runs one subcommand. `args` excludes the program name. Diagnostics go to `err`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace electroad
