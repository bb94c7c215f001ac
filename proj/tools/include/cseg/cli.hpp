#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cseg::cli {

/// Entry point of the `cseg` tool. `args` excludes the program name. Returns the exit code;
/// failures print a single diagnostic line to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace cseg::cli
