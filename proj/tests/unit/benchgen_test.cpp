#include <algorithm>
#include <map>

#include "doctest.h"
#include "ssel/benchgen.hpp"

using namespace ssel;

namespace {

BenchConfig tiny_config() {
  BenchConfig c;
  c.num_schemas = 2;
  c.ops_per_schema = 200;
  c.initial_rows_median = 3000;
  c.initial_rows_max = 10000;
  c.seed = 7;
  return c;
}

}  // namespace

TEST_CASE("gen_schema") {
  BenchConfig c;
  Rng a(99), b(99);
  CHECK(gen_schema(a, c) == gen_schema(b, c));

  Rng rng(1);
  std::vector<double> varlens;
  double sum = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto s = gen_schema(rng, c);
    REQUIRE(s.fields().size() >= c.field_count_min);
    REQUIRE(s.fields().size() <= c.field_count_max);
    for (const auto& f : s.fields()) {
      if (f.length_kind == LengthKind::Variable) {
        REQUIRE(f.avg_length_bytes >= c.varlen_min);
        REQUIRE(f.avg_length_bytes <= c.varlen_max);
        varlens.push_back(f.avg_length_bytes);
        sum += f.avg_length_bytes;
      } else {
        REQUIRE(f.avg_length_bytes <= kMaxFixedLength);
      }
    }
  }
  REQUIRE(varlens.size() > 100);
  std::nth_element(varlens.begin(), varlens.begin() + static_cast<std::ptrdiff_t>(varlens.size() / 2), varlens.end());
  CHECK(varlens[varlens.size() / 2] < sum / static_cast<double>(varlens.size()));
}

TEST_CASE("gen_workload") {
  BenchConfig c;
  c.ops_per_schema = 4000;
  Rng rng(3);
  double lo = 1, hi = 0;
  for (int i = 0; i < 4; ++i) {
    const auto s = gen_schema(rng, c);
    const auto w = gen_workload(s, rng, c);
    CHECK(w.ops.size() == c.ops_per_schema);
    CHECK_NOTHROW(validate_workload(w, s));
    for (const auto& op : w.ops) {
      if (op.type == OpType::Insert && op.result_rows > 1) {
        lo = std::min(lo, *op.key_randomness);
        hi = std::max(hi, *op.key_randomness);
      }
    }
  }
  CHECK(lo < 0.1);
  CHECK(hi > 0.9);
}

TEST_CASE("config validation") {
  BenchConfig c;
  CHECK_NOTHROW(validate_config(c));
  c.field_count_min = 1;
  CHECK_THROWS_AS(validate_config(c), Error);
  c = {};
  c.cache_clear_prob = 1.5;
  CHECK_THROWS_AS(validate_config(c), Error);
  c = {};
  c.num_schemas = 0;
  CHECK_THROWS_AS(validate_config(c), Error);
}

TEST_CASE("run_benchmark counts and invariants") {
  const auto c = tiny_config();
  const auto units = plan_benchmark(c);
  REQUIRE(units.size() == c.num_schemas);
  const auto records = run_benchmark(c);
  std::size_t expected = 0;
  for (const auto& u : units) {
    for (auto e : kAllEngines) {
      std::vector<OpTrace> traces;
      const auto unit_records = run_unit(u, e, c, &traces);
      CHECK(traces.size() == c.ops_per_schema);
      expected += unit_records.size();
    }
  }
  CHECK(records.size() == expected);
  std::map<std::pair<EngineKind, OpClass>, std::size_t> classes;
  for (const auto& r : records) {
    REQUIRE(r.features[Feature::CacheRatio] >= 0.0);
    REQUIRE(r.features[Feature::CacheRatio] <= 1.0);
    REQUIRE(r.features[Feature::Selectivity] >= 0.0);
    REQUIRE(r.features[Feature::Selectivity] <= 1.0);
    REQUIRE(r.elapsed_per_row_us > 0.0);
    if (r.engine != EngineKind::LsmRow) REQUIRE(r.features[Feature::FileCount] == 0.0);
    ++classes[{r.engine, r.op_class()}];
  }
  CHECK(classes.size() == 6);
  CHECK(run_benchmark(c) == records);
}

TEST_CASE("full cache clearing makes every read cold") {
  auto c = tiny_config();
  c.cache_clear_prob = 1.0;
  const auto units = plan_benchmark(c);
  std::vector<OpTrace> traces;
  run_unit(units[0], EngineKind::BPlusRow, c, &traces);
  for (const auto& t : traces) {
    REQUIRE(t.state_before.cached_pages == 0);
    for (const auto& g : t.groups) {
      if (t.op.type != OpType::Insert) REQUIRE(g.pages_missed == g.pages_read);
    }
  }
}

TEST_CASE("a repeated scan is cheaper the second time") {
  const TableSchema s("t", {{"K", FieldRole::Key, LengthKind::Fixed, 8}, {"V", FieldRole::Value, LengthKind::Fixed, 8}});
  EnginePartition p(s, {EngineKind::BPlusRow, DataLayout::nsm(s)}, {}, 1);
  p.bulk_load(10000);
  AccessOp scan;
  scan.type = OpType::RangeScan;
  scan.result_rows = 2000;
  scan.position = 0.3;
  const auto first = p.exec(scan);
  const auto second = p.exec(scan);
  CHECK(second.elapsed_us < first.elapsed_us);
}

TEST_CASE("records_from_trace matches extract_features") {
  const TableSchema s("t", {{"K", FieldRole::Key, LengthKind::Fixed, 8},
                            {"a", FieldRole::Value, LengthKind::Fixed, 4},
                            {"b", FieldRole::Value, LengthKind::Fixed, 8}});
  EnginePartition p(s, {EngineKind::BPlusRow, DataLayout::dsm(s)}, {}, 1);
  p.bulk_load(5000);
  AccessOp scan;
  scan.type = OpType::RangeScan;
  scan.columns = {"a", "b"};
  scan.result_rows = 100;
  const auto t = p.exec(scan);
  const auto records = records_from_trace(t, p, RecordSource::Runtime);
  REQUIRE(records.size() == 2);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& g = t.groups[i];
    CHECK(records[i].features == extract_features(s, t.op, p.structure().layout.groups[g.group], group_state(t, g)));
    CHECK(records[i].source == RecordSource::Runtime);
    CHECK(records[i].elapsed_per_row_us == doctest::Approx(g.elapsed_us / 100.0));
  }
}

TEST_CASE("sample_runtime") {
  const TableSchema s("t", {{"K", FieldRole::Key, LengthKind::Fixed, 8}, {"V", FieldRole::Value, LengthKind::Fixed, 8}});
  EnginePartition p(s, {EngineKind::LsmRow, DataLayout::nsm(s)}, {}, 1);
  p.bulk_load(1000);
  std::vector<AccessOp> ops;
  for (int i = 0; i < 10000; ++i) {
    AccessOp op;
    op.type = OpType::PointLookup;
    op.result_rows = 1;
    op.position = (i % 997) / 997.0;
    ops.push_back(op);
  }
  const auto traces = run_workload(p, ops);
  Rng all(1);
  CHECK(sample_runtime(traces, p, 1.0, all).size() == traces.size());
  Rng a(5), b(5);
  const auto half = sample_runtime(traces, p, 0.5, a);
  CHECK(half.size() >= 4500);
  CHECK(half.size() <= 5500);
  CHECK(sample_runtime(traces, p, 0.5, b) == half);
}
