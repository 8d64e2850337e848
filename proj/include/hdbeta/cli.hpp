#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hdbeta {

/// Runs one subcommand. `args` excludes the program name.
/// Returns 0 on success, 1 on invalid input or usage, 2 on runtime failure.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int dispatch(int argc, const char* const* argv);

}  // namespace hdbeta
