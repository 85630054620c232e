#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace genrank::cli {

// Runs one subcommand: synth, train, rank, eval, generate or gradcheck.
// Returns the process exit code; diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace genrank::cli
