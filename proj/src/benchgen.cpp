#include "ssel/benchgen.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <thread>

namespace ssel {

namespace {

std::uint64_t lognormal_count(Rng& rng, double median, double sigma, std::uint64_t lo, std::uint64_t hi) {
  const double x = std::round(rng.lognormal(std::log(median), sigma));
  return std::clamp(static_cast<std::uint64_t>(std::max(x, 0.0)), lo, hi);
}

InsertOrder draw_order(Rng& rng) {
  const double u = rng.uniform();
  if (u < 0.4) return InsertOrder::Sequential;
  if (u < 0.7) return InsertOrder::Random;
  if (u < 0.9) return InsertOrder::ShuffledBlock;
  return InsertOrder::Reverse;
}

ColumnSet draw_columns(Rng& rng, const TableSchema& schema) {
  ColumnSet columns;
  if (rng.bernoulli(0.3)) return columns;
  const auto names = schema.value_names();
  const auto want = rng.range(1, names.size());
  std::vector<std::size_t> idx(names.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (std::size_t i = 0; i < want; ++i) {
    std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
    columns.insert(names[idx[i]]);
  }
  return columns;
}

}  // namespace

void validate_config(const BenchConfig& c) {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (c.num_schemas == 0) bad("num_schemas must be positive");
  if (c.ops_per_schema == 0) bad("ops_per_schema must be positive");
  if (c.ops_per_phase == 0) bad("ops_per_phase must be positive");
  if (c.field_count_min < 2 || c.field_count_min >= c.field_count_max) bad("field_count_range must satisfy 2 <= min < max");
  if (c.varlen_min < 1 || c.varlen_min >= c.varlen_max) bad("varlen_range must satisfy 1 <= min < max");
  if (!(c.long_tail_shape > 0) || !(c.write_rows_tail_shape > 0) || !(c.initial_rows_shape > 0)) bad("tail shapes must be positive");
  for (double p : {c.cache_clear_prob, c.idle_prob, c.miss_probe_prob}) {
    if (!(p >= 0.0 && p <= 1.0)) bad("probabilities must lie in [0,1]");
  }
  if (c.initial_rows_median == 0 || c.initial_rows_max < c.initial_rows_median) bad("invalid initial row range");
  if (c.batch_rows_median < 2 || c.batch_rows_max < c.batch_rows_median) bad("invalid batch row range");
  if (c.scan_rows_median == 0) bad("scan_rows_median must be positive");
  if (c.sim.buffer_capacity_rows == 0 || c.sim.page_size == 0) bad("simulator capacities must be positive");
}

double PerfRecord::rows() const { return std::max(features[Feature::ResultSize], 1.0); }

TableSchema gen_schema(Rng& rng, const BenchConfig& config, std::string name) {
  const auto field_count =
      lognormal_count(rng, 8.0, config.long_tail_shape * 0.6, config.field_count_min, config.field_count_max);
  const auto key_count = std::min<std::uint64_t>(rng.range(1, 4), field_count - 1);
  const double varlen_median =
      std::clamp(16.0, static_cast<double>(config.varlen_min), static_cast<double>(config.varlen_max));
  std::vector<FieldSpec> fields;
  for (std::uint64_t i = 0; i < field_count; ++i) {
    FieldSpec f;
    const bool key = i < key_count;
    f.role = key ? FieldRole::Key : FieldRole::Value;
    f.name = key ? "K" + std::to_string(i + 1) : "V" + std::to_string(i - key_count + 1);
    if (rng.bernoulli(0.6)) {
      f.length_kind = LengthKind::Fixed;
      f.avg_length_bytes = static_cast<std::uint32_t>(rng.range(1, kMaxFixedLength));
    } else {
      f.length_kind = LengthKind::Variable;
      f.avg_length_bytes = static_cast<std::uint32_t>(
          lognormal_count(rng, varlen_median, config.long_tail_shape, config.varlen_min, config.varlen_max));
    }
    fields.push_back(std::move(f));
  }
  return TableSchema(std::move(name), std::move(fields));
}

Workload gen_workload(const TableSchema& schema, Rng& rng, const BenchConfig& config) {
  Workload w;
  w.table = schema.name();
  w.initial_table_rows = lognormal_count(rng, static_cast<double>(config.initial_rows_median),
                                         config.initial_rows_shape, 500, config.initial_rows_max);
  // Phases hold one insert order, one op mix and a few recurring column sets.
  InsertOrder order = InsertOrder::Sequential;
  double insert_share = 0.35, point_share = 0.5, single_row = 0.5;
  std::vector<ColumnSet> pool;
  for (std::uint64_t i = 0; i < config.ops_per_schema; ++i) {
    if (i % config.ops_per_phase == 0) {
      order = draw_order(rng);
      insert_share = 0.05 + 0.7 * rng.uniform();
      point_share = rng.uniform();
      single_row = rng.uniform();
      pool.clear();
      for (auto k = rng.range(1, 3); k > 0; --k) pool.push_back(draw_columns(rng, schema));
    }
    AccessOp op;
    if (rng.bernoulli(insert_share)) {
      const std::uint64_t rows =
          rng.bernoulli(single_row) ? 1
                                    : lognormal_count(rng, static_cast<double>(config.batch_rows_median),
                                                      config.write_rows_tail_shape, 2, config.batch_rows_max);
      op = make_insert(rows, order, rng.next());
    } else if (rng.bernoulli(point_share)) {
      op.type = OpType::PointLookup;
      op.columns = rng.bernoulli(0.8) ? pool[rng.below(pool.size())] : draw_columns(rng, schema);
      op.result_rows = 1;
      op.position = rng.bernoulli(config.miss_probe_prob) ? 1.0 + rng.uniform() : rng.uniform();
    } else {
      op.type = OpType::RangeScan;
      op.columns = rng.bernoulli(0.8) ? pool[rng.below(pool.size())] : draw_columns(rng, schema);
      op.result_rows = lognormal_count(rng, static_cast<double>(config.scan_rows_median), 2.0, 1,
                                       config.initial_rows_max);
      op.position = rng.uniform();
    }
    w.ops.push_back(std::move(op));
  }
  return w;
}

RuntimeState group_state(const OpTrace& trace, const GroupCost& group) {
  RuntimeState s = trace.state_before;
  if (group.group_pages_before > 0) {
    s.total_pages = group.group_pages_before;
    s.cached_pages = group.cached_pages_before;
  }
  if (s.file_count > 0 || group.l1_files_before > 0 || group.l2_files_before > 0) {
    s.l1_file_count = group.l1_files_before;
    s.l2_file_count = group.l2_files_before;
    s.file_count = s.l1_file_count + s.l2_file_count;
  }
  return s;
}

DataLayout bench_layout(EngineKind engine, const TableSchema& schema) {
  return engine == EngineKind::Columnar ? DataLayout::dsm(schema) : DataLayout::nsm(schema);
}

std::vector<PerfRecord> records_from_trace(const OpTrace& trace, const EnginePartition& partition,
                                           RecordSource source) {
  std::vector<PerfRecord> out;
  const auto& groups = partition.structure().layout.groups;
  const double rows = static_cast<double>(std::max<std::uint64_t>(trace.op.result_rows, 1));
  for (const auto& g : trace.groups) {
    PerfRecord r;
    r.engine = partition.structure().engine;
    r.features = extract_features(partition.schema(), trace.op, groups.at(g.group), group_state(trace, g));
    r.elapsed_per_row_us = g.elapsed_us / rows;
    r.surge = g.surge;
    r.source = source;
    out.push_back(r);
  }
  return out;
}

std::vector<BenchUnit> plan_benchmark(const BenchConfig& config) {
  validate_config(config);
  Rng root(config.seed);
  std::vector<BenchUnit> units;
  for (std::uint64_t s = 0; s < config.num_schemas; ++s) {
    Rng rng = root.fork(s);
    BenchUnit unit;
    unit.schema = gen_schema(rng, config, "bench" + std::to_string(s));
    unit.workload = gen_workload(unit.schema, rng, config);
    unit.data_seed = rng.next();
    unit.control_seed = rng.next();
    units.push_back(std::move(unit));
  }
  return units;
}

std::vector<PerfRecord> run_unit(const BenchUnit& unit, EngineKind engine, const BenchConfig& config,
                                 std::vector<OpTrace>* traces) {
  EnginePartition partition(unit.schema, {engine, bench_layout(engine, unit.schema)}, config.sim, unit.data_seed);
  partition.bulk_load(unit.workload.initial_table_rows);
  Rng control(unit.control_seed);
  std::vector<PerfRecord> records;
  for (const auto& op : unit.workload.ops) {
    // Drawn unconditionally so every engine sees the same interruptions.
    const bool clear = control.bernoulli(config.cache_clear_prob);
    const bool wait = control.bernoulli(config.idle_prob);
    const double wait_us = control.uniform() * 2.0 * config.sim.window_us;
    if (clear) partition.clear_page_cache();
    if (wait) partition.idle(wait_us);
    auto trace = partition.exec(op);
    auto recs = records_from_trace(trace, partition, RecordSource::Benchmark);
    records.insert(records.end(), recs.begin(), recs.end());
    if (traces) traces->push_back(std::move(trace));
  }
  return records;
}

std::vector<PerfRecord> run_benchmark(const BenchConfig& config) {
  const auto units = plan_benchmark(config);
  struct Job {
    std::size_t unit;
    EngineKind engine;
  };
  std::vector<Job> jobs;
  for (std::size_t u = 0; u < units.size(); ++u) {
    for (auto engine : kAllEngines) jobs.push_back({u, engine});
  }
  std::vector<std::vector<PerfRecord>> results(jobs.size());
  unsigned threads = config.threads != 0 ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(jobs.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      results[j] = run_unit(units[jobs[j].unit], jobs[j].engine, config);
    }
  };
  std::vector<std::future<void>> pool;
  for (unsigned t = 0; t < threads; ++t) pool.push_back(std::async(std::launch::async, worker));
  for (auto& f : pool) f.get();

  std::vector<PerfRecord> all;
  for (auto& r : results) all.insert(all.end(), r.begin(), r.end());
  return all;
}

std::vector<PerfRecord> sample_runtime(const std::vector<OpTrace>& traces, const EnginePartition& partition,
                                       double rate, Rng& rng) {
  if (!(rate > 0.0 && rate <= 1.0)) throw Error(ErrorCode::InvalidConfig, "sampling rate must lie in (0,1]");
  std::vector<PerfRecord> out;
  for (const auto& trace : traces) {
    if (!rng.bernoulli(rate)) continue;
    auto recs = records_from_trace(trace, partition, RecordSource::Runtime);
    out.insert(out.end(), recs.begin(), recs.end());
  }
  return out;
}

}  // namespace ssel
