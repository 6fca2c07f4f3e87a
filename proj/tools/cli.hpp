#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tokenweight::cli {

enum ExitCode { kOk = 0, kUsage = 1, kDataError = 2, kRuntimeFailure = 3 };

/// Runs one command line (args excludes the program name). Results go to
/// `out` unless --out names a file; diagnostics go to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tokenweight::cli
