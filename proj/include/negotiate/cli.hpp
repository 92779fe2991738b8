#pragma once

#include <atomic>
#include <iosfwd>

namespace negotiate::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2 };

/// Set (e.g. from a SIGINT handler) to stop starting new sessions. Finished
/// sessions are still written out.
std::atomic<bool>& stop_flag();

/// Entry point of the `negotiate` tool:
///   run, ablate {roles,reasoning,consensus}, inspect, convert-dataset.
/// Returns 0 on success, 1 on runtime failure, 2 on usage or config errors.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace negotiate::cli
