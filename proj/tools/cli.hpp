#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lvp::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericError = 3 };

// Entry point of the `lvp` tool; argv[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lvp::cli
