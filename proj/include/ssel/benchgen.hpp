#pragma once

#include <cstdint>
#include <vector>

#include "ssel/core.hpp"
#include "ssel/engine_sim.hpp"
#include "ssel/features.hpp"
#include "ssel/rng.hpp"

namespace ssel {

struct BenchConfig {
  std::uint64_t num_schemas = 8;
  std::uint64_t ops_per_schema = 3000;
  // Ops sharing one insert order, op mix and set of recurring read column sets.
  std::uint64_t ops_per_phase = 500;
  std::uint64_t field_count_min = 2;
  std::uint64_t field_count_max = 40;
  std::uint64_t varlen_min = 2;
  std::uint64_t varlen_max = 256;
  // Log-normal sigma for field counts and variable lengths.
  double long_tail_shape = 1.0;
  // Log-normal sigma for bulk-loaded table sizes.
  double initial_rows_shape = 1.0;
  // Log-normal sigma for batch insert sizes.
  double write_rows_tail_shape = 1.8;
  double cache_clear_prob = 0.02;
  double idle_prob = 0.05;
  std::uint64_t seed = 1;

  std::uint64_t initial_rows_median = 25000;
  std::uint64_t initial_rows_max = 150000;
  std::uint64_t batch_rows_median = 20;
  std::uint64_t batch_rows_max = 20000;
  std::uint64_t scan_rows_median = 200;
  double miss_probe_prob = 0.05;
  unsigned threads = 0;  // 0 = hardware concurrency
  SimConfig sim;
};

// Throws InvalidConfig.
void validate_config(const BenchConfig& config);

enum class RecordSource { Benchmark, Runtime };

struct PerfRecord {
  EngineKind engine = EngineKind::LsmRow;
  FeatureVector features;
  double elapsed_per_row_us = 0.0;
  bool surge = false;
  RecordSource source = RecordSource::Benchmark;

  OpClass op_class() const {
    return features[Feature::OpInsert] > 0.5 ? OpClass::Write : OpClass::Read;
  }
  // Rows the per-row time is spread over; zero-row reads still cost one op.
  double rows() const;

  bool operator==(const PerfRecord&) const = default;
};

TableSchema gen_schema(Rng& rng, const BenchConfig& config, std::string name = "bench");

// Workload plus the row count bulk-loaded before it runs.
Workload gen_workload(const TableSchema& schema, Rng& rng, const BenchConfig& config);

// The op's starting state as seen by one group: its own cache share and LSM file counts.
RuntimeState group_state(const OpTrace& trace, const GroupCost& group);

// One record per touched column group of one executed op.
std::vector<PerfRecord> records_from_trace(const OpTrace& trace, const EnginePartition& partition,
                                           RecordSource source);

// The layout each engine is benchmarked under: NSM for row engines, DSM for columnar.
DataLayout bench_layout(EngineKind engine, const TableSchema& schema);

struct BenchUnit {
  TableSchema schema;
  Workload workload;
  std::uint64_t data_seed = 0;
  std::uint64_t control_seed = 0;  // drives cache clears and idle waits
};

std::vector<BenchUnit> plan_benchmark(const BenchConfig& config);

// Runs one unit against one engine; every executed op yields records.
std::vector<PerfRecord> run_unit(const BenchUnit& unit, EngineKind engine, const BenchConfig& config,
                                 std::vector<OpTrace>* traces = nullptr);

std::vector<PerfRecord> run_benchmark(const BenchConfig& config);

// Bernoulli-samples live traces into Runtime-tagged records.
std::vector<PerfRecord> sample_runtime(const std::vector<OpTrace>& traces, const EnginePartition& partition,
                                       double rate, Rng& rng);

}  // namespace ssel
