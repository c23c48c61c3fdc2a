#include "ssel/perf_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "ssel/binary_io.hpp"

namespace ssel {

using nlohmann::json;

namespace {

std::string_view source_name(RecordSource s) { return s == RecordSource::Benchmark ? "benchmark" : "runtime"; }

RecordSource parse_source(const std::string& s) {
  if (s == "benchmark") return RecordSource::Benchmark;
  if (s == "runtime") return RecordSource::Runtime;
  throw Error(ErrorCode::InvalidConfig, "unknown record source '" + s + "'");
}

json header_line() {
  json names = json::array();
  for (auto n : kFeatureNames) names.push_back(std::string(n));
  return {{"format", "ssel-perf"},
          {"version", kPerfFormatVersion},
          {"feature_version", std::string(kFeatureVersion)},
          {"features", names}};
}

void check_header(const json& h, const std::filesystem::path& path) {
  if (!h.is_object() || h.value("format", "") != "ssel-perf") {
    throw Error(ErrorCode::IoError, path.string() + ": missing perf header");
  }
  if (h.value("version", -1) != kPerfFormatVersion) {
    throw Error(ErrorCode::UnsupportedVersion, path.string() + ": perf format version " + h["version"].dump());
  }
  if (h.value("feature_version", "") != kFeatureVersion) {
    throw Error(ErrorCode::FeatureVersionMismatch,
                path.string() + ": feature version " + h.value("feature_version", "?") + ", expected " +
                    std::string(kFeatureVersion));
  }
}

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> known, std::string_view what) {
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw Error(ErrorCode::InvalidConfig, "unknown key '" + key + "' in " + std::string(what));
    }
  }
}

}  // namespace

std::string perf_file_name(EngineKind engine, OpClass cls) {
  return "perf_" + std::string(to_string(engine)) + "_" + std::string(to_string(cls)) + ".jsonl";
}

json to_json(const PerfRecord& r) {
  json features = json::object();
  for (std::size_t i = 0; i < kFeatureCount; ++i) features[std::string(kFeatureNames[i])] = r.features.values[i];
  return {{"engine", std::string(to_string(r.engine))},
          {"source", std::string(source_name(r.source))},
          {"surge", r.surge},
          {"elapsed_per_row_us", r.elapsed_per_row_us},
          {"features", features}};
}

PerfRecord perf_record_from_json(const json& j) {
  PerfRecord r;
  r.engine = parse_engine(j.at("engine").get<std::string>());
  r.source = parse_source(j.at("source").get<std::string>());
  r.surge = j.at("surge").get<bool>();
  r.elapsed_per_row_us = j.at("elapsed_per_row_us").get<double>();
  const auto& f = j.at("features");
  for (std::size_t i = 0; i < kFeatureCount; ++i) r.features.values[i] = f.at(std::string(kFeatureNames[i])).get<double>();
  return r;
}

void write_perf_dir(const std::vector<PerfRecord>& records, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (auto engine : kAllEngines) {
    for (auto cls : {OpClass::Read, OpClass::Write}) {
      std::string text = header_line().dump() + "\n";
      for (const auto& r : records) {
        if (r.engine == engine && r.op_class() == cls) text += to_json(r).dump() + "\n";
      }
      write_file_atomic(dir / perf_file_name(engine, cls), text);
    }
  }
}

std::vector<PerfRecord> read_perf_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::IoError, "no such directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.starts_with("perf_") && name.ends_with(".jsonl")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<PerfRecord> out;
  for (const auto& path : files) {
    std::ifstream in(path);
    std::string line;
    bool first = true;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        const auto j = json::parse(line);
        if (first) {
          check_header(j, path);
          first = false;
          continue;
        }
        out.push_back(perf_record_from_json(j));
      } catch (const json::exception& e) {
        throw Error(ErrorCode::IoError, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    if (first) throw Error(ErrorCode::IoError, path.string() + ": empty perf file");
  }
  return out;
}

SimConfig sim_config_from_json(const json& j, SimConfig c) {
  reject_unknown(j,
                 {"page_size", "hit_us", "miss_us", "buffer_row_us", "flush_page_us", "write_op_us", "cpu_row_us",
                  "btree_level_us", "lsm_probe_us", "lsm_merge_cpu_factor", "lsm_l1_trigger", "lsm_file_pages",
                  "lsm_size_ratio", "columnar_scan_miss_factor", "cache_capacity_pages", "buffer_capacity_rows", "window_us",
                  "disk_bandwidth_bytes_per_sec", "disk_contention"},
                 "sim config");
  try {
    take(j, "page_size", c.page_size);
    take(j, "hit_us", c.hit_us);
    take(j, "miss_us", c.miss_us);
    take(j, "buffer_row_us", c.buffer_row_us);
    take(j, "flush_page_us", c.flush_page_us);
    take(j, "write_op_us", c.write_op_us);
    take(j, "cpu_row_us", c.cpu_row_us);
    take(j, "btree_level_us", c.btree_level_us);
    take(j, "lsm_probe_us", c.lsm_probe_us);
    take(j, "lsm_merge_cpu_factor", c.lsm_merge_cpu_factor);
    take(j, "lsm_l1_trigger", c.lsm_l1_trigger);
    take(j, "lsm_file_pages", c.lsm_file_pages);
    take(j, "lsm_size_ratio", c.lsm_size_ratio);
    take(j, "columnar_scan_miss_factor", c.columnar_scan_miss_factor);
    take(j, "cache_capacity_pages", c.cache_capacity_pages);
    take(j, "buffer_capacity_rows", c.buffer_capacity_rows);
    take(j, "window_us", c.window_us);
    take(j, "disk_bandwidth_bytes_per_sec", c.disk_bandwidth_bytes_per_sec);
    take(j, "disk_contention", c.disk_contention);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("sim config: ") + e.what());
  }
  if (c.page_size == 0 || c.buffer_capacity_rows == 0 || !(c.window_us > 0)) {
    throw Error(ErrorCode::InvalidConfig, "sim config: page_size, buffer_capacity_rows and window_us must be positive");
  }
  return c;
}

BenchConfig bench_config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "bench config must be an object");
  reject_unknown(j,
                 {"version", "num_schemas", "ops_per_schema", "ops_per_phase", "field_count_range", "varlen_range",
                  "long_tail_shape", "initial_rows_shape", "write_rows_tail_shape", "cache_clear_prob", "idle_prob", "seed", "initial_rows_median",
                  "initial_rows_max", "batch_rows_median", "batch_rows_max", "scan_rows_median", "miss_probe_prob",
                  "threads", "sim"},
                 "bench config");
  if (j.value("version", 1) != 1) throw Error(ErrorCode::UnsupportedVersion, "bench config version " + j["version"].dump());
  BenchConfig c;
  try {
    take(j, "num_schemas", c.num_schemas);
    take(j, "ops_per_schema", c.ops_per_schema);
    take(j, "ops_per_phase", c.ops_per_phase);
    if (j.contains("field_count_range")) {
      c.field_count_min = j["field_count_range"].at(0).get<std::uint64_t>();
      c.field_count_max = j["field_count_range"].at(1).get<std::uint64_t>();
    }
    if (j.contains("varlen_range")) {
      c.varlen_min = j["varlen_range"].at(0).get<std::uint64_t>();
      c.varlen_max = j["varlen_range"].at(1).get<std::uint64_t>();
    }
    take(j, "long_tail_shape", c.long_tail_shape);
    take(j, "initial_rows_shape", c.initial_rows_shape);
    take(j, "write_rows_tail_shape", c.write_rows_tail_shape);
    take(j, "cache_clear_prob", c.cache_clear_prob);
    take(j, "idle_prob", c.idle_prob);
    take(j, "seed", c.seed);
    take(j, "initial_rows_median", c.initial_rows_median);
    take(j, "initial_rows_max", c.initial_rows_max);
    take(j, "batch_rows_median", c.batch_rows_median);
    take(j, "batch_rows_max", c.batch_rows_max);
    take(j, "scan_rows_median", c.scan_rows_median);
    take(j, "miss_probe_prob", c.miss_probe_prob);
    take(j, "threads", c.threads);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bench config: ") + e.what());
  }
  if (j.contains("sim")) c.sim = sim_config_from_json(j["sim"]);
  validate_config(c);
  return c;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
}

BenchConfig read_bench_config(const std::filesystem::path& path) { return bench_config_from_json(read_json_file(path)); }

}  // namespace ssel
