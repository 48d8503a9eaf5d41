// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

namespace gossipwatch::cli {

/// Process exit codes shared by all subcommands.
enum ExitCode : int {
  kOk = 0,
  kMismatch = 1,     // verify found differences
  kBadInput = 2,     // unreadable or invalid config, scenario, snapshot or truth
  kBindFailure = 3,
  kUnsupported = 4,  // requested transport is not available
};

/// Parses `argv` and runs one subcommand: crawl, analyze, simulate or verify.
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

/// Asks a running crawl to stop at the next event boundary. Async-signal-safe.
void request_interrupt();
void reset_interrupt();

}  // namespace gossipwatch::cli
