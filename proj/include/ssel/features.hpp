#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

#include "ssel/core.hpp"

namespace ssel {

// System-level runtime observations at the moment an operation starts. LSM
// file counts describe one column group's tree (every group of a partition
// receives the same write stream, so the counts agree across groups) and are
// zero for non-LSM engines.
struct RuntimeState {
  double disk_read_tput = 0.0;   // bytes/sec over the trailing window
  double disk_write_tput = 0.0;  // bytes/sec over the trailing window
  std::uint64_t cached_pages = 0;
  std::uint64_t total_pages = 1;
  std::uint64_t file_count = 0;
  std::uint64_t l1_file_count = 0;
  std::uint64_t l2_file_count = 0;

  double cache_ratio() const {
    return total_pages == 0 ? 0.0 : static_cast<double>(cached_pages) / static_cast<double>(total_pages);
  }

  bool operator==(const RuntimeState&) const = default;
};

enum class Feature : std::size_t {
  AvgRowLen,
  NumKeyFields,
  NumValueFields,
  KeyBytes,
  ValueBytes,
  NumFixedFields,
  NumVarFields,
  FixedBytes,
  VarBytes,
  OpPointLookup,
  OpRangeScan,
  OpInsert,
  ResultSize,
  Selectivity,
  InsertRandomness,
  DiskReadTput,
  DiskWriteTput,
  CacheRatio,
  FileCount,
  L1FileCount,
  L2FileCount,
  Count_,
};

inline constexpr std::size_t kFeatureCount = static_cast<std::size_t>(Feature::Count_);

// Bumped whenever the feature order or meaning changes; models trained on one
// version are rejected by readers of another.
inline constexpr std::string_view kFeatureVersion = "ssel-fv1";

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "avg_row_len",     "num_key_fields",  "num_value_fields", "key_bytes",         "value_bytes",
    "num_fixed_fields", "num_var_fields", "fixed_bytes",      "var_bytes",         "op_point_lookup",
    "op_range_scan",   "op_insert",       "result_size",      "selectivity",       "insert_randomness",
    "disk_read_tput",  "disk_write_tput", "cache_ratio",      "file_count",        "l1_file_count",
    "l2_file_count",
};

struct FeatureVector {
  std::array<double, kFeatureCount> values{};

  double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }
  double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }

  bool operator==(const FeatureVector&) const = default;
  auto operator<=>(const FeatureVector&) const = default;
};

// Number of pairs i<j with seq[i] > seq[j]; equal keys never count.
std::uint64_t inversions(std::span<const std::uint64_t> seq);

// Normalized inversion count in [0,1]: 0 for sorted or reverse-sorted input,
// close to 1 for a random permutation. Throws DegenerateSequence below 2 keys.
double randomness(std::span<const std::uint64_t> seq);

// Builds an insert of `rows` fresh keys whose key_randomness matches the order
// the simulator will replay (single-row inserts are sequential by definition).
AccessOp make_insert(std::uint64_t rows, InsertOrder order, std::uint64_t seed);

// Schema features are taken over the group's effective schema: all key fields
// plus the group's value columns.
FeatureVector extract_features(const TableSchema& schema, const AccessOp& op, const ColumnSet& layout_group,
                               const RuntimeState& state);

}  // namespace ssel
