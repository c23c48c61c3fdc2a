#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "ssel/benchgen.hpp"
#include "ssel/dbscan.hpp"
#include "ssel/gbdt.hpp"
#include "ssel/logistic.hpp"

namespace ssel {

// How the per-op write estimate combines the surge and regular regressors.
//   AsPrinted:     f_o(x) p(x) + f_r(x), with f_o fitted to the surge points'
//                  cost in excess of the regular model.
//   Complementary: f_o(x) p(x) + f_r(x) (1 - p(x)), with f_o fitted to the
//                  surge points' full cost.
enum class WriteComposition { AsPrinted, Complementary };

enum class TargetSpace { Log, Linear };

struct LearnerOptions {
  GbdtParams gbdt;
  LogisticParams logistic;
  DbscanParams dbscan;
  double read_drop_cap = 0.2;
  double surge_k = 5.0;
  std::size_t min_records = 50;
  TargetSpace target_space = TargetSpace::Log;
  // Weight every sample by its row count.
  bool row_weighted = false;
  WriteComposition composition = WriteComposition::AsPrinted;
  // false: one global smearing factor instead of a fitted one.
  bool conditional_smearing = true;
  GbdtParams smearing_gbdt;
  // Uniform subsample per (engine, op class) above this size; 0 keeps all.
  std::size_t max_records_per_class = 50000;
  std::uint64_t sample_seed = 1;
};

struct SplitResult {
  std::vector<PerfRecord> regular;
  std::vector<PerfRecord> surge_points;
};

// Surge points: trace flag set, or per-row time above k x median. Throws EmptyInput.
SplitResult split_outliers_write(const std::vector<PerfRecord>& records, double k = 5.0);

// Drops DBSCAN noise in (log(result_size+1), log(elapsed_per_row)) space,
// capped at `max_drop` of the records. Throws EmptyInput.
std::vector<PerfRecord> drop_outliers_read(const std::vector<PerfRecord>& records, const DbscanParams& params = {},
                                           double max_drop = 0.2);

// A regressor in the configured target space, predicting elapsed_per_row_us.
struct TimeRegressor {
  TargetSpace space = TargetSpace::Log;
  BoostedRegressor booster;
  // Retransformation factor for log-space fits: a regression of exp(residual)
  // on the features, so the exponentiated prediction lands on the conditional
  // arithmetic mean. Constant 1 for linear targets.
  BoostedRegressor smearing = BoostedRegressor::constant(1.0);

  double predict(const FeatureRow& x) const;
  bool operator==(const TimeRegressor&) const = default;
};

TimeRegressor fit_time_regressor(const std::vector<PerfRecord>& records, const std::vector<double>& targets,
                                 const LearnerOptions& options);

struct ReadModel {
  TimeRegressor f;
  bool operator==(const ReadModel&) const = default;
};

struct WriteModel {
  SurgeClassifier surge;
  TimeRegressor f_o;
  TimeRegressor f_r;
  bool operator==(const WriteModel&) const = default;
};

struct EngineModel {
  ReadModel read;
  WriteModel write;
  bool operator==(const EngineModel&) const = default;
};

struct CostModel {
  std::string feature_version{kFeatureVersion};
  std::uint32_t model_version = 1;
  std::uint64_t trained_on_records = 0;
  WriteComposition composition = WriteComposition::AsPrinted;
  std::map<EngineKind, EngineModel> engines;

  bool has_engine(EngineKind e) const { return engines.count(e) != 0; }
  bool operator==(const CostModel&) const = default;
};

// Throws InsufficientData naming the starved (engine, op class).
CostModel train(const std::vector<PerfRecord>& records, const LearnerOptions& options = {});

// Retrains when the record count grew by at least 10% since the last train;
// the returned model carries model_version + 1. Returns nullopt otherwise.
std::optional<CostModel> retrain_if_grown(const CostModel& previous, const std::vector<PerfRecord>& records,
                                          const LearnerOptions& options = {}, double growth = 0.10);

struct WriteTerms {
  double p = 0.0;
  double f_o = 0.0;
  double f_r = 0.0;
};

WriteTerms write_terms(const CostModel& model, EngineKind engine, const FeatureVector& features);

// Per-row write cost from its three terms under the given composition.
double compose_write(const WriteTerms& t, WriteComposition composition);

// Per-row elapsed time. Throws ModelMissing when the engine was never trained.
double predict_op(const CostModel& model, EngineKind engine, OpClass cls, const FeatureVector& features);

// Resolves result_rows and selectivity of `op` against a table of `table_rows`
// rows, the way the simulator will execute it.
AccessOp resolve_op(const AccessOp& op, std::uint64_t table_rows);

// Page geometry the simulated engines use; sizes the per-group LSM level 2.
struct StorageShape {
  std::uint64_t page_size = 4096;
  std::uint64_t lsm_file_pages = 64;
  // Start the walk with nothing cached, as after a conversion or a restart.
  bool cold_cache = true;
};

// Pages of the groups a workload reads, and whether one group is among them.
struct ReadFootprint {
  std::uint64_t read_pages = 0;  // 0: unknown, the cache is spread evenly
  bool group_read = false;
  double warmed = 1.0;  // fraction of the group's pages read since the cache was cold
};

// State one column group sees. The cached pages of `state` go to the read
// groups first, evenly per page; for LSM the level-2 file count is that of a
// tree holding `table_rows` rows of the group.
RuntimeState group_state(const StorageStructure& structure, const TableSchema& schema, const ColumnSet& group,
                         const RuntimeState& state, std::uint64_t table_rows, const StorageShape& shape = {},
                         const ReadFootprint& footprint = {});

// Sum over ops of frequency x rows x per-row prediction, per touched group.
// The table grows with inserts as the ops are walked in order, and with a cold
// cache each group's cached share grows with the pages its reads have touched.
double predict_workload(const CostModel& model, const StorageStructure& structure, const TableSchema& schema,
                        const Workload& workload, const RuntimeState& state, const StorageShape& shape = {});

std::vector<std::uint8_t> encode_model(const CostModel& model);
CostModel decode_model(std::span<const std::uint8_t> bytes);  // throws UnsupportedVersion, FeatureVersionMismatch
void save_model(const CostModel& model, const std::filesystem::path& path);
CostModel load_model(const std::filesystem::path& path);

}  // namespace ssel
