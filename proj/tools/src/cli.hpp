#pragma once

#include <string>
#include <vector>

namespace rdfluct::tools {

/// Parses arguments, runs one subcommand and maps failures to exit codes.
int run_cli(const std::vector<std::string>& args);

}  // namespace rdfluct::tools
