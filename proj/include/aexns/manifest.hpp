#pragma once
// Run manifests: everything needed to reproduce a run byte-for-byte, plus
// wall-clock bookkeeping (timestamps live only in manifest.json; CSV and
// summary outputs stay byte-exact functions of profile/seed/params).

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace aexns::cli {

inline constexpr const char* kArtifactVersion = "1.0.0";

struct RunManifest {
    std::string subcommand;
    std::string profile_name;
    std::uint64_t profile_hash = 0;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> params;
    std::string started_at;   // ISO-8601 UTC
    std::string finished_at;
    std::vector<std::string> outputs;  // paths relative to the run directory

    // Deterministic portion (no timestamps); embedded into summary JSON.
    nlohmann::json to_json(bool include_timestamps) const;
};

std::string iso8601_utc_now();

// Writes manifest.json (with timestamps) into `dir`.
void write_manifest(const RunManifest& manifest, const std::filesystem::path& dir);

}  // namespace aexns::cli
