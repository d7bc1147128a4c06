#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace gentle::cli {

enum ExitCode : int { kOk = 0, kRuntimeError = 1, kUsageError = 2, kConfigError = 3 };

/// Seed streams derived from the run seed, one per pipeline stage.
enum SeedStream : std::uint64_t { kCollectStream = 1, kSplitStream = 2, kTrainStream = 3, kInitStream = 4, kGraspStream = 5 };

/// Runs one subcommand. `args` excludes the program name. Reports and help
/// go to `out`; line-delimited JSON log events go to `log`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& log);

}  // namespace gentle::cli
