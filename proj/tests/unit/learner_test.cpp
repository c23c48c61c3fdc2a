#include <cmath>
#include <filesystem>
#include <unistd.h>

#include "../common/properties.hpp"
#include "../common/small_model.hpp"
#include "doctest.h"
#include "ssel/dbscan.hpp"
#include "ssel/learner.hpp"

using namespace ssel;

namespace {

PerfRecord record(EngineKind engine, OpType type, double per_row_us, double result_size = 1.0, bool surge = false) {
  PerfRecord r;
  r.engine = engine;
  r.features[Feature::OpPointLookup] = type == OpType::PointLookup;
  r.features[Feature::OpRangeScan] = type == OpType::RangeScan;
  r.features[Feature::OpInsert] = type == OpType::Insert;
  r.features[Feature::ResultSize] = result_size;
  r.elapsed_per_row_us = per_row_us;
  r.surge = surge;
  return r;
}

std::vector<PerfRecord> constant_records(double t, Rng& rng) {
  std::vector<PerfRecord> out;
  for (auto e : kAllEngines) {
    for (int i = 0; i < 120; ++i) {
      auto r = record(e, i % 2 ? OpType::Insert : OpType::RangeScan, t, 1.0 + static_cast<double>(rng.below(50)));
      r.features[Feature::AvgRowLen] = 10.0 + static_cast<double>(rng.below(100));
      r.features[Feature::CacheRatio] = rng.uniform();
      out.push_back(r);
    }
  }
  return out;
}

double r_squared(const std::vector<double>& actual, const std::vector<double>& predicted) {
  double mean = 0;
  for (double a : actual) mean += a;
  mean /= static_cast<double>(actual.size());
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ss_res += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
    ss_tot += (actual[i] - mean) * (actual[i] - mean);
  }
  return 1.0 - ss_res / ss_tot;
}

}  // namespace

TEST_CASE("split_outliers_write") {
  std::vector<PerfRecord> same(10, record(EngineKind::LsmRow, OpType::Insert, 3.0));
  CHECK(split_outliers_write(same).surge_points.empty());

  std::vector<PerfRecord> five;
  for (double t : {1.0, 1.0, 1.0, 1.0, 10.0}) five.push_back(record(EngineKind::LsmRow, OpType::Insert, t));
  const auto split = split_outliers_write(five, 5.0);
  REQUIRE(split.surge_points.size() == 1);
  CHECK(split.surge_points[0].elapsed_per_row_us == 10.0);
  CHECK(split.regular.size() == 4);

  same[3].surge = true;
  const auto flagged = split_outliers_write(same);
  CHECK(flagged.surge_points.size() == 1);

  CHECK_THROWS_AS(split_outliers_write({}), Error);
}

TEST_CASE("drop_outliers_read") {
  Rng rng(4);
  std::vector<PerfRecord> cluster;
  for (int i = 0; i < 100; ++i) {
    cluster.push_back(record(EngineKind::BPlusRow, OpType::RangeScan, std::exp(1.0 + 0.1 * rng.uniform()),
                             std::exp(2.0 + 0.1 * rng.uniform()) - 1.0));
  }
  CHECK(drop_outliers_read(cluster).size() == 100);

  auto with_outlier = cluster;
  with_outlier.push_back(record(EngineKind::BPlusRow, OpType::RangeScan, std::exp(10.0), std::exp(20.0) - 1.0));
  const auto kept = drop_outliers_read(with_outlier);
  CHECK(kept.size() == 100);
  for (const auto& r : kept) CHECK(r.elapsed_per_row_us < 10.0);

  std::vector<PerfRecord> few(cluster.begin(), cluster.begin() + 5);
  few.push_back(with_outlier.back());
  CHECK(drop_outliers_read(few).size() == few.size());

  CHECK_THROWS_AS(drop_outliers_read({}), Error);
}

TEST_CASE("dbscan labels") {
  std::vector<Point2> pts;
  for (int i = 0; i < 20; ++i) pts.push_back({0.01 * i, 0.0});
  pts.push_back({50.0, 50.0});
  const auto noise = dbscan_noise(pts, {0.5, 4});
  for (int i = 0; i < 20; ++i) CHECK_FALSE(noise[i]);
  CHECK(noise[20]);
  const auto capped = dbscan_outliers(pts, {0.5, 4}, 0.0);
  CHECK(std::none_of(capped.begin(), capped.end(), [](bool b) { return b; }));
}

TEST_CASE("write composition") {
  CHECK(compose_write({0.02, 100.0, 2.0}, WriteComposition::AsPrinted) == doctest::Approx(4.0));
  CHECK(compose_write({0.0, 100.0, 2.0}, WriteComposition::AsPrinted) == 2.0);
  CHECK(compose_write({0.0, 100.0, 2.0}, WriteComposition::Complementary) == 2.0);
  CHECK(compose_write({0.5, 100.0, 2.0}, WriteComposition::Complementary) == doctest::Approx(51.0));
}

TEST_CASE("untrained classifier answers one half") {
  const SurgeClassifier c;
  FeatureRow x{};
  CHECK(c.probability(x) == 0.5);
  x.fill(123.0);
  CHECK(c.probability(x) == 0.5);
}

TEST_CASE("logistic fit separates a threshold") {
  std::vector<FeatureRow> x;
  std::vector<bool> y;
  for (int i = 0; i < 200; ++i) {
    FeatureRow r{};
    r[0] = i;
    x.push_back(r);
    y.push_back(i >= 150);
  }
  const auto c = SurgeClassifier::fit(x, y);
  CHECK(c.probability(x[10]) < 0.1);
  CHECK(c.probability(x[199]) > 0.9);
}

TEST_CASE("training on a constant target predicts the constant") {
  Rng rng(8);
  const auto records = constant_records(7.5, rng);
  LearnerOptions o;
  o.min_records = 10;
  const auto model = train(records, o);
  for (const auto& r : records) {
    REQUIRE(predict_op(model, r.engine, r.op_class(), r.features) == doctest::Approx(7.5).epsilon(1e-3));
  }
}

TEST_CASE("training is deterministic") {
  Rng rng(9);
  auto records = constant_records(2.0, rng);
  for (auto& r : records) r.elapsed_per_row_us = 1.0 + r.features[Feature::AvgRowLen] * 0.1 + rng.uniform();
  LearnerOptions o;
  o.min_records = 10;
  o.gbdt.num_trees = 20;
  CHECK(train(records, o) == train(records, o));
}

TEST_CASE("insufficient data names the starved class") {
  Rng rng(10);
  auto records = constant_records(1.0, rng);
  std::erase_if(records, [](const PerfRecord& r) { return r.engine == EngineKind::Columnar && r.op_class() == OpClass::Write; });
  try {
    train(records);
    FAIL("expected InsufficientData");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientData);
    CHECK(std::string(e.what()).find("columnar") != std::string::npos);
  }
}

TEST_CASE("missing engine") {
  CostModel empty;
  CHECK_THROWS_AS(predict_op(empty, EngineKind::LsmRow, OpClass::Read, {}), Error);
}

TEST_CASE("model serialization round trip") {
  const auto& model = testing::small_model();
  const auto decoded = decode_model(encode_model(model));
  CHECK(decoded == model);
  const auto path = std::filesystem::temp_directory_path() / ("ssel_model_" + std::to_string(::getpid()));
  save_model(model, path);
  const auto loaded = load_model(path);
  std::filesystem::remove(path);
  for (const auto& r : testing::small_records()) {
    if (r.features[Feature::ResultSize] > 100) continue;
    REQUIRE(predict_op(loaded, r.engine, r.op_class(), r.features) ==
            predict_op(model, r.engine, r.op_class(), r.features));
  }

  auto other = model;
  other.feature_version = "other";
  CHECK_THROWS_AS(decode_model(encode_model(other)), Error);
}

TEST_CASE("retrain requires ten percent more data") {
  const auto& model = testing::small_model();
  const auto& records = testing::small_records();
  CHECK_FALSE(retrain_if_grown(model, records).has_value());
  auto more = records;
  const auto extra = records.size() / 10 + 1;
  more.insert(more.end(), records.begin(), records.begin() + static_cast<std::ptrdiff_t>(extra));
  LearnerOptions o;
  o.gbdt.num_trees = 10;
  o.smearing_gbdt.num_trees = 5;
  const auto next = retrain_if_grown(model, more, o);
  REQUIRE(next.has_value());
  CHECK(next->model_version == model.model_version + 1);
  CHECK(next->trained_on_records == more.size());
}

TEST_CASE("held-out read prediction on simulator data") {
  const auto held_out = run_benchmark(testing::small_bench_config(2));
  std::map<EngineKind, std::pair<std::vector<double>, std::vector<double>>> per_engine;
  for (const auto& r : held_out) {
    if (r.op_class() != OpClass::Read) continue;
    auto& [actual, predicted] = per_engine[r.engine];
    actual.push_back(std::log(r.elapsed_per_row_us));
    predicted.push_back(std::log(predict_op(testing::small_model(), r.engine, OpClass::Read, r.features)));
  }
  REQUIRE(per_engine.size() == 3);
  for (const auto& [engine, ap] : per_engine) {
    INFO(to_string(engine));
    CHECK(r_squared(ap.first, ap.second) > 0.8);
  }
}

TEST_CASE("predict_workload") {
  const auto& model = testing::small_model();
  std::vector<FieldSpec> fields{{"K", FieldRole::Key, LengthKind::Fixed, 8}};
  for (int i = 1; i <= 12; ++i) fields.push_back({"V" + std::to_string(i), FieldRole::Value, LengthKind::Fixed, 8});
  const TableSchema s("t", std::move(fields));
  const StorageStructure nsm{EngineKind::BPlusRow, DataLayout::nsm(s)};
  RuntimeState state;
  state.total_pages = 300;

  CHECK(predict_workload(model, nsm, s, {"t", {}, 10000}, state) == 0.0);

  AccessOp scan;
  scan.type = OpType::RangeScan;
  scan.columns = {"V2", "V3", "V7"};
  scan.result_rows = 2000;
  AccessOp point;
  point.type = OpType::PointLookup;
  point.result_rows = 1;
  point.position = 0.4;
  Workload w{"t", {scan, point, scan}, 10000};
  auto doubled = w;
  for (auto& op : doubled.ops) op.frequency *= 2;
  const StorageShape warm{4096, 64, false};
  const double once = predict_workload(model, nsm, s, w, state, warm);
  CHECK(once > 0.0);
  CHECK(predict_workload(model, nsm, s, doubled, state, warm) == doctest::Approx(2 * once).epsilon(1e-9));

  // Repeated inserts each see the table their predecessors grew, so writes scale only approximately.
  Workload writes{"t", {make_insert(10, InsertOrder::Random, 1)}, 10000};
  const double w1 = predict_workload(model, nsm, s, writes, state, warm);
  writes.ops[0].frequency = 2;
  CHECK(predict_workload(model, nsm, s, writes, state, warm) == doctest::Approx(2 * w1).epsilon(0.02));

  const StorageStructure split{EngineKind::BPlusRow, parse_layout("(V2,V3,V7)(V1,V4,V5,V6,V8,V9,V10,V11,V12)", s)};
  Workload scans{"t", std::vector<AccessOp>(20, scan), 10000};
  CHECK(predict_workload(model, split, s, scans, state) < predict_workload(model, nsm, s, scans, state));
}

TEST_CASE("boosting lowers training error tree by tree") { CHECK(props::check_boosting_monotonicity(3, 3) == ""); }
