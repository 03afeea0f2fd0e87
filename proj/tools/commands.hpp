#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace finid::cli {

/// Runs one subcommand; args excludes the program name. Errors go to @p err as a JSON record.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace finid::cli
