#pragma once

namespace agrimon::cli {

/// Exit codes: 0 success, 2 usage or validation error, 1 runtime failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

int run(int argc, char** argv);

}  // namespace agrimon::cli
