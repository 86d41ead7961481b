#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "slelab/config.hpp"
#include "slelab/errors.hpp"

namespace slelab {

// Content hash of the canonical config serialization (nlohmann objects dump
// with sorted keys, doubles as shortest round-trip decimals).
inline std::string run_id_for(const nlohmann::json& config) {
    const std::string canon = config.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
    for (unsigned char c : canon) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct RunManifest {
    std::string run_id;
    nlohmann::json config;
    std::string tool_version_ = tool_version;
    std::string started;
    std::string finished;

    nlohmann::json to_json() const {
        return nlohmann::json{
            {"run_id", run_id},
            {"config", config},
            {"tool_version", tool_version_},
            {"started", started},
            {"finished", finished},
        };
    }
};

// Append-only JSON-lines result store. Records for run X live in X.jsonl,
// manifests accumulate in manifest.jsonl. Records carry no timestamps, so a
// rerun of the same (config, seed, version) is byte-identical.
class ResultStore {
  public:
    explicit ResultStore(const std::filesystem::path& dir) : dir_(dir) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw store_error("result store: cannot create " + dir_.string());
    }

    const std::filesystem::path& directory() const { return dir_; }

    std::filesystem::path records_file(const std::string& run_id) const {
        return dir_ / (run_id + ".jsonl");
    }

    bool has_run(const std::string& run_id) const {
        return std::filesystem::exists(records_file(run_id));
    }

    // Refuses an existing run_id unless force; with force the record file is
    // rewritten and a fresh manifest line appended.
    void write_run(const RunManifest& manifest, const std::vector<nlohmann::json>& records,
                   bool force = false) {
        std::lock_guard<std::mutex> lock(write_mutex_);
        if (has_run(manifest.run_id) && !force)
            throw store_error("run " + manifest.run_id +
                              " already stored; pass --force to overwrite");
        {
            std::ofstream out(records_file(manifest.run_id), std::ios::trunc);
            if (!out) throw store_error("result store: cannot write records");
            for (const auto& r : records) out << r.dump() << "\n";
        }
        {
            std::ofstream out(dir_ / "manifest.jsonl", std::ios::app);
            if (!out) throw store_error("result store: cannot append manifest");
            out << manifest.to_json().dump() << "\n";
        }
    }

  private:
    std::filesystem::path dir_;
    std::mutex write_mutex_; // single appender
};

} // namespace slelab
