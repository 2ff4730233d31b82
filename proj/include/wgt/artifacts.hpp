#pragma once

// Output files of a batch run: CSV/JSON writers with full double precision,
// SHA-256 checksums and the run manifest.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace wgt {

/// 17 significant digits, '.' decimal; "nan", "inf", "-inf" for non-finite.
std::string format_double(double x);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_bytes(const std::string& bytes);

using CsvRow = std::vector<std::string>;

struct ArtifactRecord {
    std::string name; // relative to the output directory
    std::string sha256;
    std::uintmax_t bytes = 0;
};

/// Files written into one output directory. Every writer registers its file;
/// discard() removes all of them (used when a task fails part way).
class ArtifactSet {
public:
    explicit ArtifactSet(std::filesystem::path dir);

    const std::filesystem::path& dir() const { return dir_; }

    void write_text(const std::string& name, const std::string& content);
    void write_json(const std::string& name, const nlohmann::json& doc);
    void write_csv(const std::string& name, const CsvRow& header, const std::vector<CsvRow>& rows);

    const std::vector<ArtifactRecord>& records() const { return records_; }
    void discard();

    /// Writes manifest.json listing every artifact with its checksum; call last.
    void write_manifest(nlohmann::json manifest);

private:
    std::filesystem::path dir_;
    std::vector<ArtifactRecord> records_;
};

/// Wall-clock timings of named tasks, in insertion order.
class TaskTimer {
public:
    void start(const std::string& name);
    void stop();
    nlohmann::json to_json() const;

private:
    std::vector<std::pair<std::string, double>> done_;
    std::string current_;
    std::chrono::steady_clock::time_point t0_;
};

} // namespace wgt
