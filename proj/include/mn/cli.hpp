#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mn::cli {

/// Runs one `mneurons` command line (without the program name). Returns 0 on
/// success, 1 on a usage error and 2 on a runtime error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace mn::cli
