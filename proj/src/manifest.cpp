#include "favsites/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "favsites/rng.hpp"
#include "json.hpp"

namespace favsites::manifest {

using nlohmann::json;

bool RunManifest::all_pass() const {
    for (const auto& v : verdicts)
        if (v.verdict == "fail") return false;
    return true;
}

std::string to_json(const RunManifest& m) {
    json j;
    j["command"] = m.command;
    j["params"] = m.params;
    j["masterSeed"] = m.master_seed;
    j["derivedSeeds"] = m.derived_seeds;
    j["startedAt"] = m.started_at;
    j["finishedAt"] = m.finished_at;
    j["outputs"] = json::array();
    for (const auto& o : m.outputs)
        j["outputs"].push_back(
            {{"path", o.path}, {"checksum", o.checksum}, {"bytes", o.bytes}});
    j["verdicts"] = json::array();
    for (const auto& v : m.verdicts)
        j["verdicts"].push_back(
            {{"name", v.name}, {"verdict", v.verdict}, {"detail", v.detail}});
    j["version"] = m.version;
    return j.dump(2) + "\n";
}

RunManifest from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("manifest parse error: ") + e.what());
    }
    RunManifest m;
    try {
        m.command = j.at("command").get<std::string>();
        m.params = j.at("params").get<std::map<std::string, std::string>>();
        m.master_seed = j.at("masterSeed").get<uint64_t>();
        m.derived_seeds = j.at("derivedSeeds").get<std::vector<uint64_t>>();
        m.started_at = j.at("startedAt").get<std::string>();
        m.finished_at = j.at("finishedAt").get<std::string>();
        for (const auto& o : j.at("outputs"))
            m.outputs.push_back({o.at("path").get<std::string>(),
                                 o.at("checksum").get<std::string>(),
                                 o.at("bytes").get<uint64_t>()});
        for (const auto& v : j.at("verdicts"))
            m.verdicts.push_back({v.at("name").get<std::string>(),
                                  v.at("verdict").get<std::string>(),
                                  v.at("detail").get<std::string>()});
        m.version = j.at("version").get<std::string>();
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("manifest field error: ") + e.what());
    }
    return m;
}

RunManifest load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open manifest: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

void save(const RunManifest& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    out << to_json(m);
}

std::string file_checksum_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot checksum missing file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string bytes = ss.str();
    uint64_t h = rng::fnv1a(bytes);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

std::string now_iso8601() {
    using namespace std::chrono;
    auto now = system_clock::now();
    auto t = system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ",
                  tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                  tm.tm_min, tm.tm_sec);
    return std::string(buf);
}

Diff compare_for_replay(const RunManifest& recorded, const RunManifest& fresh) {
    Diff d;
    auto add = [&](const std::string& s) { d.lines.push_back(s); };
    if (recorded.version != fresh.version)
        add("version: recorded " + recorded.version + " vs current " + fresh.version);
    if (recorded.command != fresh.command)
        add("command: " + recorded.command + " vs " + fresh.command);
    if (recorded.master_seed != fresh.master_seed)
        add("masterSeed: " + std::to_string(recorded.master_seed) + " vs " +
            std::to_string(fresh.master_seed));
    for (const auto& [k, v] : recorded.params) {
        auto it = fresh.params.find(k);
        if (it == fresh.params.end())
            add("param " + k + ": recorded " + v + " vs (absent)");
        else if (it->second != v)
            add("param " + k + ": recorded " + v + " vs " + it->second);
    }
    for (const auto& [k, v] : fresh.params)
        if (!recorded.params.count(k))
            add("param " + k + ": (absent) vs " + v);

    std::map<std::string, const OutputRecord*> rec;
    for (const auto& o : recorded.outputs) rec[o.path] = &o;
    for (const auto& o : fresh.outputs) {
        auto it = rec.find(o.path);
        if (it == rec.end()) {
            add("output " + o.path + ": not in recorded manifest");
            continue;
        }
        if (it->second->checksum != o.checksum)
            add("output " + o.path + ": checksum " + it->second->checksum +
                " vs " + o.checksum);
        rec.erase(it);
    }
    for (const auto& [p, o] : rec) add("output " + p + ": missing from replay");
    return d;
}

} // namespace favsites::manifest
