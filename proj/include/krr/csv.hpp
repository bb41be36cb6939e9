#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace krr {

// '.' decimal, 17 significant digits: enough to round-trip any double.
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

std::uint64_t fnv1a64(const std::string& bytes);

struct RunManifest {
    nlohmann::json config_echo;
    std::uint64_t seed = 0;
    std::string timestamp;
    std::string artifact_version;
    std::vector<std::string> outputs; // file names relative to the out dir
    std::vector<std::string> checksums;
    nlohmann::json extra;

    nlohmann::json to_json() const;
};

// Writes <out_dir>/manifest.json with one checksum per listed output file.
void write_manifest(const std::string& out_dir, RunManifest manifest);

inline const char* artifact_version() { return "0.1.0"; }

} // namespace krr
