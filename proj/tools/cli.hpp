#pragma once

namespace padx::cli {

// Exit codes: 0 success, 1 check or output failure, 2 usage or input error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

int run(int argc, char** argv);

}  // namespace padx::cli
