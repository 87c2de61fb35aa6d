#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace metatune {

/// Runs one command line (args[0] is the program name). Exit 0 on success,
/// 1 on usage, validation or definition errors, 2 on I/O errors.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_command(int argc, char** argv);

}  // namespace metatune
