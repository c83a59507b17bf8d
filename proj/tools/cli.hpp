#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sinkmd::cli {

/// Exit codes of every subcommand.
enum ExitCode : int {
    kSuccess = 0,      // converged / all checks passed
    kInputError = 1,   // bad arguments or malformed files
    kNotConverged = 2  // max_iter, numeric failure, or a failed check
};

/// Runs `sinkmd <subcommand> ...`; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sinkmd::cli
