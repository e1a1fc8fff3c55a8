#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mhcl::cli {

/// Runs one subcommand. Returns 0 on success, 2 for usage errors (bad flags,
/// unreadable files, invalid config values) and 1 for runtime failures.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mhcl::cli
