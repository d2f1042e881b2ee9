#pragma once

#include <string>
#include <vector>

namespace sdtp::cli {

// Batch front door used by the command-line tool and by tests. Returns the
// process exit code; on failure prints one machine-parsable line
// "error: <what>" to the given stream.
int run(const std::vector<std::string>& args, std::string* error_line
        = nullptr);

}  // namespace sdtp::cli
