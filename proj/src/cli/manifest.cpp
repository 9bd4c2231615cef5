#include "cli/manifest.hpp"

#include <fstream>

#include "liquidex/errors.hpp"

namespace liquidex::cli {

std::string file_checksum(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read back " + path.string() + " for checksumming");
    std::uint64_t hash = 14695981039346656037ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 1099511628211ULL;
        }
        if (!in) break;
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
    return std::string(hex);
}

void RunManifest::add_file(const std::filesystem::path& path) {
    files_.emplace_back(path.filename().string(), file_checksum(path));
}

void RunManifest::write(const std::filesystem::path& out_dir) const {
    nlohmann::ordered_json j;
    j["version"] = kVersion;
    j["command"] = command;
    j["master_seed"] = master_seed;
    j["config"] = resolved_config;
    j["defaults_applied"] = defaults_applied;
    nlohmann::ordered_json files = nlohmann::ordered_json::object();
    for (const auto& [name, sum] : files_) files[name] = sum;
    j["output_checksums"] = files;

    const std::filesystem::path path = out_dir / "manifest.json";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failure on " + path.string());
}

}  // namespace liquidex::cli
