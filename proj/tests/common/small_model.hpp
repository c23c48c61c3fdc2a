#pragma once

// A small benchmark and the model trained on it, built once per test binary.

#include "ssel/benchgen.hpp"
#include "ssel/learner.hpp"

namespace ssel::testing {

inline BenchConfig small_bench_config(std::uint64_t seed = 1) {
  BenchConfig c;
  c.num_schemas = 8;
  c.ops_per_schema = 600;
  c.initial_rows_median = 8000;
  c.initial_rows_max = 40000;
  c.seed = seed;
  return c;
}

inline const std::vector<PerfRecord>& small_records() {
  static const auto records = run_benchmark(small_bench_config());
  return records;
}

inline const CostModel& small_model() {
  static const auto model = [] {
    LearnerOptions o;
    o.gbdt.num_trees = 60;
    o.smearing_gbdt.num_trees = 30;
    return train(small_records(), o);
  }();
  return model;
}

}  // namespace ssel::testing
