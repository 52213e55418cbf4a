#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace seqtest {

// Full CLI entry point. args excludes the program name. Returns the process
// exit code: 0 success, 2 configuration error, 1 runtime failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace seqtest
