#pragma once

// Run manifests: a JSON record of what a command ran, with which
// parameters and seed, what it wrote and what it concluded.  Checksums are
// 64-bit FNV-1a over raw file bytes; replays compare everything except the
// wall-clock timestamps.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace favsites::manifest {

inline constexpr const char* kVersion = "0.3.1";

struct OutputRecord {
    std::string path; // relative to the manifest's directory
    std::string checksum;
    uint64_t bytes = 0;
};

struct VerdictRecord {
    std::string name;
    std::string verdict; // pass / fail / inconclusive / info
    std::string detail;
};

struct RunManifest {
    std::string command;
    std::map<std::string, std::string> params;
    uint64_t master_seed = 0;
    std::vector<uint64_t> derived_seeds; // first per-stream seeds actually used
    std::string started_at;
    std::string finished_at;
    std::vector<OutputRecord> outputs;
    std::vector<VerdictRecord> verdicts;
    std::string version = kVersion;

    bool all_pass() const;
};

std::string to_json(const RunManifest& m);
RunManifest from_json_text(const std::string& text); // throws std::runtime_error
RunManifest load(const std::string& path);
void save(const RunManifest& m, const std::string& path);

// FNV-1a over the file's bytes, as a fixed-width hex string.
std::string file_checksum_hex(const std::string& path);

std::string now_iso8601();

struct Diff {
    std::vector<std::string> lines;
    bool empty() const { return lines.empty(); }
};

// Everything except timestamps must agree for a replay to count as clean.
Diff compare_for_replay(const RunManifest& recorded, const RunManifest& fresh);

} // namespace favsites::manifest
