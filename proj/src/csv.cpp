#include "krr/csv.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "krr/errors.hpp"

namespace krr {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open for writing: " + path);
    out << content;
    if (!out) throw NumericalError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open for reading: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

nlohmann::json RunManifest::to_json() const {
    nlohmann::json doc;
    doc["config"] = config_echo;
    doc["seed"] = seed;
    doc["timestamp"] = timestamp;
    doc["version"] = artifact_version;
    doc["outputs"] = nlohmann::json::array();
    for (std::size_t i = 0; i < outputs.size(); ++i)
        doc["outputs"].push_back({{"file", outputs[i]}, {"fnv1a64", checksums[i]}});
    if (!extra.is_null()) doc["extra"] = extra;
    return doc;
}

void write_manifest(const std::string& out_dir, RunManifest manifest) {
    manifest.checksums.clear();
    for (const std::string& name : manifest.outputs) {
        std::string bytes = read_text_file(out_dir + "/" + name);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(fnv1a64(bytes)));
        manifest.checksums.emplace_back(buf);
    }
    if (manifest.timestamp.empty()) {
        auto now = std::chrono::system_clock::now();
        std::time_t t = std::chrono::system_clock::to_time_t(now);
        char stamp[32];
        std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
        manifest.timestamp = stamp;
    }
    if (manifest.artifact_version.empty()) manifest.artifact_version = artifact_version();
    write_text_file(out_dir + "/manifest.json", manifest.to_json().dump(2) + "\n");
}

} // namespace krr
