#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "liquidex/errors.hpp"

namespace liquidex::cli {

/// Shortest round-trip decimal representation of a double ("nan"/"inf" spelled out).
std::string format_double(double value);

/// Minimal RFC-4180-style CSV writer: header row plus numeric rows, '.' decimal
/// separator, '\n' line endings, UTF-8. Output is byte-deterministic for equal
/// inputs.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
    void write_row(const std::vector<double>& values);
    void close();
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t columns_ = 0;
};

}  // namespace liquidex::cli
