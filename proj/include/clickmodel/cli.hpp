#pragma once

// Command-line front end: simulate, fit, evaluate, classify, compare, oracle.
//
// Exit codes: 0 success, 1 invalid input (bad values, files, logs or
// parameter tables), 2 usage error (unknown command or flag, missing or
// conflicting flags), 3 internal fault.

#include <iosfwd>
#include <string>
#include <vector>

namespace clickmodel {

/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace clickmodel
