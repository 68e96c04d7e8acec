#include "aexns/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include "aexns/common.hpp"

namespace aexns::cli {

std::string iso8601_utc_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

nlohmann::json RunManifest::to_json(bool include_timestamps) const {
    nlohmann::json j;
    j["artifact_version"] = kArtifactVersion;
    j["subcommand"] = subcommand;
    j["profile"] = profile_name;
    char hash_hex[19];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(profile_hash));
    j["profile_hash"] = hash_hex;
    j["seed"] = seed;
    j["params"] = params;
    j["outputs"] = outputs;
    if (include_timestamps) {
        j["started_at"] = started_at;
        j["finished_at"] = finished_at;
    }
    return j;
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& dir) {
    std::ofstream out(dir / "manifest.json");
    if (!out) throw ConfigError("cannot write manifest in " + dir.string());
    out << manifest.to_json(true).dump(2) << "\n";
}

}  // namespace aexns::cli
