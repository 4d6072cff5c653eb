#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace corpusdrift::cli {

// Full command-line surface. args excludes the program name. Returns the
// process exit code: 0 success, 1 usage error, 2 data error.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace corpusdrift::cli
