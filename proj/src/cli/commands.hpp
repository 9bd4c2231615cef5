#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace liquidex::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumeric = 4;
inline constexpr int kExitTolerance = 5;

struct CommandOptions {
    std::string config_path;  ///< empty means all defaults
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n_paths;
    unsigned threads = 1;  ///< worker threads; never part of the manifest
};

int run_paths(const CommandOptions& opt);
int run_sweep(const CommandOptions& opt);
int run_oracle_check(const CommandOptions& opt);
int run_multi(const CommandOptions& opt);
int run_drift_demo(const CommandOptions& opt);

/// Maps a thrown error to the documented exit codes (used by the tool's main).
int exit_code_for_current_exception();

}  // namespace liquidex::cli
