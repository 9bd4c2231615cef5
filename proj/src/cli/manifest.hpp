#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace liquidex::cli {

inline constexpr const char* kVersion = "liquidex 0.1.0";

/// FNV-1a 64-bit digest of a file's bytes, as a fixed-width hex string.
std::string file_checksum(const std::filesystem::path& path);

/// Record of one run: the fully resolved configuration (defaults filled in),
/// the master seed, the code version and a checksum per emitted file.
/// Identical manifests imply byte-identical outputs.
struct RunManifest {
    nlohmann::ordered_json resolved_config;
    std::vector<std::string> defaults_applied;
    std::uint64_t master_seed = 0;
    std::string command;

    RunManifest(nlohmann::ordered_json cfg, std::vector<std::string> defaults,
                std::uint64_t seed, std::string cmd)
        : resolved_config(std::move(cfg)), defaults_applied(std::move(defaults)),
          master_seed(seed), command(std::move(cmd)) {}

    void add_file(const std::filesystem::path& path);
    void write(const std::filesystem::path& out_dir) const;

private:
    std::vector<std::pair<std::string, std::string>> files_;
};

}  // namespace liquidex::cli
