#pragma once

#include <atomic>
#include <exception>
#include <iosfwd>
#include <string>
#include <vector>

namespace ridesim::cli {

/// Process exit status per error class.
enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kConfigError = 2,
    kBindFailure = 3,
    kIoFailure = 4,
    kCorruptLog = 5,
    kVersionMismatch = 6,
    kDivergent = 7,
    kTraceParseError = 8,
    kUnknownRoute = 9,
    kInvalidBounds = 10,
    kOrderingViolation = 11,
    kEngineError = 12,
    kInternal = 70,
};

int exit_code_for(const std::exception &e);

/// Entry point behind the `ridesim` binary. `args` excludes the program name.
/// Summaries go to `out` as JSON, diagnostics to `err`. `stop` ends a live
/// run early (signal handlers set it).
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err,
            const std::atomic<bool> *stop = nullptr);

} // namespace ridesim::cli
