#pragma once

// Run manifests and the on-disk layout of command outputs.

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace saucir::run {

inline constexpr const char* kVersion = "0.1.0";

std::string sha256_hex(std::string_view bytes);
/// Throws DataError when the file cannot be read.
std::string sha256_file(const std::string& path);

/// UTC time as YYYY-MM-DDTHH:MM:SSZ. A set SOURCE_DATE_EPOCH replaces the
/// clock so repeated runs write identical manifests.
std::string timestamp();

struct InputFile {
    std::string role;
    std::string path;
    std::string sha256;
};

struct Manifest {
    std::string command;
    std::vector<std::string> argv;
    std::string cwd = std::filesystem::current_path().string();
    nlohmann::json config;
    std::vector<InputFile> inputs;
    std::optional<std::uint64_t> seed;
    std::string version = kVersion;
    std::string started;
    std::string finished;
    std::vector<std::string> outputs;

    void add_input(const std::string& role, const std::string& path) {
        inputs.push_back({role, path, sha256_file(path)});
    }
};

nlohmann::json to_json(const Manifest& manifest);

/// Where a command writes. An `--out` ending in ".json" names the main result
/// file; side files and the manifest sit next to it as <stem>.<name> and
/// <stem>.manifest.json, and the log goes to standard error only. Any other
/// `--out` is a run directory holding the results, manifest.json and log.txt.
class OutputLayout {
public:
    explicit OutputLayout(const std::string& out);

    /// Path of the main JSON result, given its name inside a run directory.
    std::filesystem::path main(const std::string& name) const;
    /// Path of a side file such as "forecast.csv".
    std::filesystem::path side(const std::string& name) const;
    std::filesystem::path manifest() const;
    std::optional<std::filesystem::path> log() const;

    /// Creates the directory that will hold the outputs.
    void prepare() const;

private:
    std::filesystem::path out_;
    bool single_file_ = false;
};

}  // namespace saucir::run
