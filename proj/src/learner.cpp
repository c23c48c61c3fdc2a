#include "ssel/learner.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>

#include "ssel/binary_io.hpp"

namespace ssel {

namespace {

constexpr double kMinTime = 1e-9;
constexpr double kMinSmearing = 0.05;

double median_of(std::vector<double> v) {
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lo + hi) / 2.0;
}

std::string class_label(EngineKind e, OpClass c) {
  return std::string(to_string(e)) + "/" + std::string(to_string(c));
}

}  // namespace

SplitResult split_outliers_write(const std::vector<PerfRecord>& records, double k) {
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no write records to split");
  std::vector<double> times;
  times.reserve(records.size());
  for (const auto& r : records) times.push_back(r.elapsed_per_row_us);
  const double threshold = k * median_of(times);
  SplitResult out;
  for (const auto& r : records) {
    if (r.surge || r.elapsed_per_row_us > threshold) {
      out.surge_points.push_back(r);
    } else {
      out.regular.push_back(r);
    }
  }
  return out;
}

std::vector<PerfRecord> drop_outliers_read(const std::vector<PerfRecord>& records, const DbscanParams& params,
                                           double max_drop) {
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no read records to filter");
  std::vector<Point2> points;
  points.reserve(records.size());
  for (const auto& r : records) {
    points.push_back({std::log(r.features[Feature::ResultSize] + 1.0), std::log(std::max(r.elapsed_per_row_us, kMinTime))});
  }
  const auto drop = dbscan_outliers(points, params, max_drop);
  std::vector<PerfRecord> kept;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!drop[i]) kept.push_back(records[i]);
  }
  return kept;
}

double TimeRegressor::predict(const FeatureRow& x) const {
  const double f = booster.predict(x);
  const double v = space == TargetSpace::Log ? std::exp(std::min(f, 700.0)) * std::max(smearing.predict(x), kMinSmearing) : f;
  return std::isfinite(v) ? std::max(v, 0.0) : 0.0;
}

TimeRegressor fit_time_regressor(const std::vector<PerfRecord>& records, const std::vector<double>& targets,
                                 const LearnerOptions& options) {
  TimeRegressor reg;
  reg.space = options.target_space;
  if (records.empty()) {
    reg.booster = BoostedRegressor::constant(options.target_space == TargetSpace::Log ? std::log(kMinTime) : 0.0);
    return reg;
  }
  std::vector<FeatureRow> x;
  std::vector<double> y, w;
  for (std::size_t i = 0; i < records.size(); ++i) {
    x.push_back(records[i].features.values);
    const double t = std::max(targets[i], kMinTime);
    y.push_back(reg.space == TargetSpace::Log ? std::log(t) : t);
    w.push_back(options.row_weighted ? records[i].rows() : 1.0);
  }
  reg.booster = BoostedRegressor::fit(x, y, w, options.gbdt);
  if (reg.space == TargetSpace::Log) {
    std::vector<double> ratio(x.size());
    double sw = 0.0, se = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      ratio[i] = std::exp(std::min(y[i] - reg.booster.predict(x[i]), 700.0));
      sw += w[i];
      se += w[i] * ratio[i];
    }
    reg.smearing = options.conditional_smearing ? BoostedRegressor::fit(x, ratio, w, options.smearing_gbdt)
                                                : BoostedRegressor::constant(sw > 0.0 ? se / sw : 1.0);
  }
  return reg;
}

namespace {

ReadModel train_read(const std::vector<PerfRecord>& records, const LearnerOptions& options) {
  const auto kept = drop_outliers_read(records, options.dbscan, options.read_drop_cap);
  std::vector<double> targets;
  for (const auto& r : kept) targets.push_back(r.elapsed_per_row_us);
  return {fit_time_regressor(kept, targets, options)};
}

WriteModel train_write(const std::vector<PerfRecord>& records, const LearnerOptions& options) {
  auto split = split_outliers_write(records, options.surge_k);
  WriteModel m;

  std::vector<FeatureRow> x;
  std::vector<bool> labels;
  for (const auto& r : split.regular) {
    x.push_back(r.features.values);
    labels.push_back(false);
  }
  for (const auto& r : split.surge_points) {
    x.push_back(r.features.values);
    labels.push_back(true);
  }
  m.surge = SurgeClassifier::fit(x, labels, options.logistic);

  std::vector<double> regular_targets;
  for (const auto& r : split.regular) regular_targets.push_back(r.elapsed_per_row_us);
  m.f_r = fit_time_regressor(split.regular, regular_targets, options);

  std::vector<double> surge_targets;
  for (const auto& r : split.surge_points) {
    if (options.composition == WriteComposition::AsPrinted) {
      const double excess = r.elapsed_per_row_us - m.f_r.predict(r.features.values);
      surge_targets.push_back(std::max(excess, 0.01 * r.elapsed_per_row_us));
    } else {
      surge_targets.push_back(r.elapsed_per_row_us);
    }
  }
  m.f_o = fit_time_regressor(split.surge_points, surge_targets, options);
  return m;
}

}  // namespace

CostModel train(const std::vector<PerfRecord>& records, const LearnerOptions& options) {
  std::map<std::pair<EngineKind, OpClass>, std::vector<PerfRecord>> parts;
  for (const auto& r : records) parts[{r.engine, r.op_class()}].push_back(r);
  for (auto engine : kAllEngines) {
    for (auto cls : {OpClass::Read, OpClass::Write}) {
      const auto n = parts[{engine, cls}].size();
      if (n < options.min_records) {
        throw Error(ErrorCode::InsufficientData, class_label(engine, cls) + " has " + std::to_string(n) +
                                                     " records, needs " + std::to_string(options.min_records));
      }
    }
  }

  if (options.max_records_per_class > 0) {
    Rng rng(options.sample_seed);
    for (auto& [key, part] : parts) {
      if (part.size() <= options.max_records_per_class) continue;
      std::vector<std::size_t> idx(part.size());
      std::iota(idx.begin(), idx.end(), 0);
      for (std::size_t i = 0; i < options.max_records_per_class; ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
      idx.resize(options.max_records_per_class);
      std::sort(idx.begin(), idx.end());
      std::vector<PerfRecord> kept;
      kept.reserve(idx.size());
      for (auto i : idx) kept.push_back(std::move(part[i]));
      part = std::move(kept);
    }
  }

  CostModel model;
  model.trained_on_records = records.size();
  model.composition = options.composition;
  std::vector<std::future<ReadModel>> reads;
  std::vector<std::future<WriteModel>> writes;
  for (auto engine : kAllEngines) {
    reads.push_back(std::async(std::launch::async, train_read, std::cref(parts[{engine, OpClass::Read}]),
                               std::cref(options)));
    writes.push_back(std::async(std::launch::async, train_write, std::cref(parts[{engine, OpClass::Write}]),
                                std::cref(options)));
  }
  for (std::size_t i = 0; i < std::size(kAllEngines); ++i) {
    auto& em = model.engines[kAllEngines[i]];
    em.read = reads[i].get();
    em.write = writes[i].get();
  }
  return model;
}

std::optional<CostModel> retrain_if_grown(const CostModel& previous, const std::vector<PerfRecord>& records,
                                          const LearnerOptions& options, double growth) {
  const double before = static_cast<double>(previous.trained_on_records);
  if (static_cast<double>(records.size()) < before * (1.0 + growth)) return std::nullopt;
  auto model = train(records, options);
  model.model_version = previous.model_version + 1;
  return model;
}

namespace {

const EngineModel& engine_model(const CostModel& model, EngineKind engine) {
  if (model.feature_version != kFeatureVersion) {
    throw Error(ErrorCode::FeatureVersionMismatch,
                "model uses " + model.feature_version + ", expected " + std::string(kFeatureVersion));
  }
  auto it = model.engines.find(engine);
  if (it == model.engines.end()) {
    throw Error(ErrorCode::ModelMissing, "no cost model for engine " + std::string(to_string(engine)));
  }
  return it->second;
}

}  // namespace

WriteTerms write_terms(const CostModel& model, EngineKind engine, const FeatureVector& features) {
  const auto& w = engine_model(model, engine).write;
  return {w.surge.probability(features.values), w.f_o.predict(features.values), w.f_r.predict(features.values)};
}

double compose_write(const WriteTerms& t, WriteComposition composition) {
  const double regular = composition == WriteComposition::AsPrinted ? t.f_r : t.f_r * (1.0 - t.p);
  return std::max(0.0, t.f_o * t.p + regular);
}

double predict_op(const CostModel& model, EngineKind engine, OpClass cls, const FeatureVector& features) {
  if (cls == OpClass::Read) return engine_model(model, engine).read.f.predict(features.values);
  return compose_write(write_terms(model, engine, features), model.composition);
}

AccessOp resolve_op(const AccessOp& op, std::uint64_t table_rows) {
  AccessOp r = op;
  const double rows = static_cast<double>(table_rows);
  switch (op.type) {
    case OpType::PointLookup: {
      const bool found = table_rows > 0 && op.position < 1.0;
      r.result_rows = found ? 1 : 0;
      r.selectivity = found ? 1.0 / rows : 0.0;
      break;
    }
    case OpType::RangeScan:
      r.result_rows = std::min(op.result_rows, table_rows);
      r.selectivity = table_rows == 0 ? 0.0 : static_cast<double>(r.result_rows) / rows;
      break;
    case OpType::Insert:
      r.selectivity = static_cast<double>(op.result_rows) / static_cast<double>(table_rows + op.result_rows);
      break;
  }
  return r;
}

RuntimeState group_state(const StorageStructure& structure, const TableSchema& schema, const ColumnSet& group,
                         const RuntimeState& state, std::uint64_t table_rows, const StorageShape& shape,
                         const ReadFootprint& footprint) {
  RuntimeState s = state;
  const auto page_size = std::max<std::uint64_t>(shape.page_size, 1);
  const auto pages = (table_rows * row_bytes_for_group(schema, group) + page_size - 1) / page_size;
  const double cached = static_cast<double>(state.cached_pages);
  const double total = static_cast<double>(std::max<std::uint64_t>(state.total_pages, 1));
  const double read = static_cast<double>(footprint.read_pages);
  double ratio = cached / total;
  if (footprint.read_pages > 0) {
    if (footprint.group_read) {
      ratio = cached / read;
    } else {
      ratio = total > read ? (cached - read) / (total - read) : 0.0;
    }
  }
  ratio = std::clamp(std::min(ratio, footprint.warmed), 0.0, 1.0);
  s.total_pages = std::max<std::uint64_t>(pages, 1);
  s.cached_pages = static_cast<std::uint64_t>(std::llround(ratio * static_cast<double>(s.total_pages)));
  if (structure.engine != EngineKind::LsmRow) return s;
  const auto file_pages = std::max<std::uint64_t>(shape.lsm_file_pages, 1);
  s.l2_file_count = (pages + file_pages - 1) / file_pages;
  s.file_count = s.l1_file_count + s.l2_file_count;
  return s;
}

double predict_workload(const CostModel& model, const StorageStructure& structure, const TableSchema& schema,
                        const Workload& workload, const RuntimeState& state, const StorageShape& shape) {
  validate_structure(structure, schema);
  validate_workload(workload, schema);
  std::map<FeatureVector, double> memo;
  std::uint64_t rows = workload.initial_table_rows;
  const auto page_size = std::max<std::uint64_t>(shape.page_size, 1);
  std::vector<bool> read(structure.layout.groups.size(), false);
  for (const auto& op : workload.ops) {
    if (op.type == OpType::Insert) continue;
    const auto columns = effective_columns(op, schema);
    for (std::size_t g = 0; g < read.size(); ++g) {
      const auto& group = structure.layout.groups[g];
      if (std::any_of(group.begin(), group.end(), [&](const std::string& c) { return columns.count(c) != 0; })) {
        read[g] = true;
      }
    }
  }
  std::uint64_t read_pages = 0;
  for (std::size_t g = 0; g < read.size(); ++g) {
    if (read[g]) read_pages += (rows * row_bytes_for_group(schema, structure.layout.groups[g]) + page_size - 1) / page_size;
  }
  std::vector<double> warmed(read.size(), shape.cold_cache ? 0.0 : 1.0);
  double total = 0.0;
  for (const auto& op : workload.ops) {
    const auto columns = effective_columns(op, schema);
    for (std::uint64_t rep = 0; rep < op.frequency; ++rep) {
      const auto resolved = resolve_op(op, rows);
      const double row_count = static_cast<double>(std::max<std::uint64_t>(resolved.result_rows, 1));
      double op_cost = 0.0;
      for (std::size_t g = 0; g < read.size(); ++g) {
        const auto& group = structure.layout.groups[g];
        if (op.type != OpType::Insert &&
            std::none_of(group.begin(), group.end(), [&](const std::string& c) { return columns.count(c) != 0; })) {
          continue;
        }
        const auto gs = group_state(structure, schema, group, state, rows, shape, {read_pages, read[g], warmed[g]});
        const auto fv = extract_features(schema, resolved, group, gs);
        auto it = memo.find(fv);
        if (it == memo.end()) it = memo.emplace(fv, predict_op(model, structure.engine, op_class(op.type), fv)).first;
        op_cost += it->second;
        if (op.type != OpType::Insert && warmed[g] < 1.0) {
          const double touched = op.type == OpType::RangeScan ? resolved.selectivity
                                                              : 1.0 / static_cast<double>(gs.total_pages);
          warmed[g] = 1.0 - (1.0 - warmed[g]) * (1.0 - std::clamp(touched, 0.0, 1.0));
          if (warmed[g] > 0.999) warmed[g] = 1.0;
        }
      }
      total += row_count * op_cost;
      if (op.type == OpType::Insert) rows += op.result_rows;
      // Once warm, repetitions of a read see the same table and cost the same.
      const bool warm = std::all_of(warmed.begin(), warmed.end(), [](double w) { return w >= 1.0; });
      if (op.type != OpType::Insert && warm) {
        total += static_cast<double>(op.frequency - 1) * row_count * op_cost;
        break;
      }
    }
  }
  return total;
}

// Model file layout (little-endian):
//   "SSELMODL" u32 format_version str feature_version u32 model_version
//   u64 trained_on_records u8 composition u32 engine_count
//   per engine: u8 engine, read regressor, classifier, f_o, f_r
//   regressor: u8 target_space, smearing booster, booster
//   u64 fnv1a checksum of everything before it
namespace {

constexpr std::string_view kModelMagic = "SSELMODL";
constexpr std::uint32_t kModelFormatVersion = 1;

void write_regressor(ByteWriter& w, const TimeRegressor& r) {
  w.u8(r.space == TargetSpace::Log ? 0 : 1);
  r.smearing.write(w);
  r.booster.write(w);
}

TimeRegressor read_regressor(ByteReader& r) {
  TimeRegressor t;
  const auto space = r.u8();
  if (space > 1) r.fail("unknown target space");
  t.space = space == 0 ? TargetSpace::Log : TargetSpace::Linear;
  t.smearing = BoostedRegressor::read(r);
  t.booster = BoostedRegressor::read(r);
  return t;
}

}  // namespace

std::vector<std::uint8_t> encode_model(const CostModel& model) {
  ByteWriter w;
  w.magic(kModelMagic);
  w.u32(kModelFormatVersion);
  w.str(model.feature_version);
  w.u32(model.model_version);
  w.u64(model.trained_on_records);
  w.u8(model.composition == WriteComposition::AsPrinted ? 0 : 1);
  w.u32(static_cast<std::uint32_t>(model.engines.size()));
  for (const auto& [engine, em] : model.engines) {
    w.u8(static_cast<std::uint8_t>(engine));
    write_regressor(w, em.read.f);
    em.write.surge.write(w);
    write_regressor(w, em.write.f_o);
    write_regressor(w, em.write.f_r);
  }
  auto bytes = w.take();
  ByteWriter tail;
  tail.u64(fnv1a(bytes));
  bytes.insert(bytes.end(), tail.bytes().begin(), tail.bytes().end());
  return bytes;
}

CostModel decode_model(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, ErrorCode::IoError);
  if (!r.magic(kModelMagic)) r.fail("not a cost model file");
  const auto version = r.u32();
  if (version != kModelFormatVersion) {
    throw Error(ErrorCode::UnsupportedVersion, "model format version " + std::to_string(version));
  }
  if (bytes.size() < 8 + 4 + 8) r.fail("truncated model");
  ByteReader tail(bytes.last(8), ErrorCode::IoError);
  if (fnv1a(bytes.first(bytes.size() - 8)) != tail.u64()) r.fail("model checksum mismatch");

  CostModel m;
  m.feature_version = r.str();
  if (m.feature_version != kFeatureVersion) {
    throw Error(ErrorCode::FeatureVersionMismatch,
                "model uses " + m.feature_version + ", expected " + std::string(kFeatureVersion));
  }
  m.model_version = r.u32();
  m.trained_on_records = r.u64();
  const auto composition = r.u8();
  if (composition > 1) r.fail("unknown write composition");
  m.composition = composition == 0 ? WriteComposition::AsPrinted : WriteComposition::Complementary;
  const auto engine_count = r.u32();
  if (engine_count > std::size(kAllEngines)) r.fail("too many engines");
  for (std::uint32_t i = 0; i < engine_count; ++i) {
    const auto e = r.u8();
    if (e >= std::size(kAllEngines)) r.fail("unknown engine id");
    EngineModel em;
    em.read.f = read_regressor(r);
    em.write.surge = SurgeClassifier::read(r);
    em.write.f_o = read_regressor(r);
    em.write.f_r = read_regressor(r);
    m.engines[static_cast<EngineKind>(e)] = std::move(em);
  }
  if (r.remaining() != 8) r.fail("trailing bytes in model");
  return m;
}

void save_model(const CostModel& model, const std::filesystem::path& path) { write_file_atomic(path, encode_model(model)); }

CostModel load_model(const std::filesystem::path& path) { return decode_model(read_file_bytes(path)); }

}  // namespace ssel
