#pragma once

#include <iosfwd>

namespace prob::cli {

/// Entry point of the `prob` command line tool. Returns 0 on success, 1 on a
/// runtime or domain error, 2 on a usage or configuration error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace prob::cli
