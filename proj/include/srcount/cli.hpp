#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace srcount {

// Runs one command line (without the program name) and returns the process
// exit code: 0 ok, 2 config/validation, 3 I/O, 4 divergence, 5 corruption.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace srcount
