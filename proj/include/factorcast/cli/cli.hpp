#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace factorcast::cli {

/// Parses `args` (without the program name) and runs one subcommand. Reports go to
/// files under --out; progress and summaries to `out`; a failure prints one line to
/// `err` and returns nonzero.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// argv form used by the executable.
int run(int argc, const char* const* argv);

struct FlagDoc {
    std::string name;
    std::string description;
};

/// Every registered flag with its help line, and the full help text.
std::vector<FlagDoc> flag_docs();
std::string help_text();

}  // namespace factorcast::cli
