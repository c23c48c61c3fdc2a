#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "ssel/benchgen.hpp"

namespace ssel {

inline constexpr int kPerfFormatVersion = 1;

// "perf_<engine>_<class>.jsonl", e.g. perf_lsm_write.jsonl.
std::string perf_file_name(EngineKind engine, OpClass cls);

// Writes one file per (engine, op class), each starting with a header line.
void write_perf_dir(const std::vector<PerfRecord>& records, const std::filesystem::path& dir);

// Reads every perf_*.jsonl file in the directory. Throws FeatureVersionMismatch,
// UnsupportedVersion or IoError.
std::vector<PerfRecord> read_perf_dir(const std::filesystem::path& dir);

nlohmann::json to_json(const PerfRecord& record);
PerfRecord perf_record_from_json(const nlohmann::json& j);

// Unknown keys are rejected so that typos surface as InvalidConfig.
SimConfig sim_config_from_json(const nlohmann::json& j, SimConfig base = {});
BenchConfig bench_config_from_json(const nlohmann::json& j);
BenchConfig read_bench_config(const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace ssel
