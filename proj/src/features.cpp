#include "ssel/features.hpp"

#include <algorithm>
#include <vector>

namespace ssel {

namespace {

std::uint64_t merge_count(std::vector<std::uint64_t>& values, std::vector<std::uint64_t>& scratch, std::size_t lo,
                          std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t count = merge_count(values, scratch, lo, mid) + merge_count(values, scratch, mid, hi);
  std::size_t i = lo, j = mid, out = lo;
  while (i < mid && j < hi) {
    // Take from the left on ties so equal keys are never counted.
    if (values[i] <= values[j]) {
      scratch[out++] = values[i++];
    } else {
      count += mid - i;
      scratch[out++] = values[j++];
    }
  }
  while (i < mid) scratch[out++] = values[i++];
  while (j < hi) scratch[out++] = values[j++];
  std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo), scratch.begin() + static_cast<std::ptrdiff_t>(hi),
            values.begin() + static_cast<std::ptrdiff_t>(lo));
  return count;
}

}  // namespace

std::uint64_t inversions(std::span<const std::uint64_t> seq) {
  std::vector<std::uint64_t> values(seq.begin(), seq.end());
  std::vector<std::uint64_t> scratch(values.size());
  return merge_count(values, scratch, 0, values.size());
}

double randomness(std::span<const std::uint64_t> seq) {
  if (seq.size() < 2) throw Error(ErrorCode::DegenerateSequence, "randomness needs at least two keys");
  const double n = static_cast<double>(seq.size());
  const double pairs = n * n - n;
  const double v = static_cast<double>(inversions(seq));
  const double r = v < pairs / 4.0 ? 4.0 * v / pairs : 2.0 - 4.0 * v / pairs;
  return std::clamp(r, 0.0, 1.0);
}

AccessOp make_insert(std::uint64_t rows, InsertOrder order, std::uint64_t seed) {
  AccessOp op;
  op.type = OpType::Insert;
  op.result_rows = rows;
  op.order = rows < 2 ? InsertOrder::Sequential : order;
  op.order_seed = seed;
  op.key_randomness = rows < 2 ? 0.0 : randomness(insert_permutation(rows, op.order, seed));
  return op;
}

FeatureVector extract_features(const TableSchema& schema, const AccessOp& op, const ColumnSet& layout_group,
                               const RuntimeState& state) {
  FeatureVector fv;
  double key_bytes = 0, fixed_fields = 0, var_fields = 0, fixed_bytes = 0, var_bytes = 0;
  auto account = [&](const FieldSpec& field) {
    if (field.length_kind == LengthKind::Fixed) {
      fixed_fields += 1;
      fixed_bytes += field.avg_length_bytes;
    } else {
      var_fields += 1;
      var_bytes += field.avg_length_bytes;
    }
  };
  for (const auto& field : schema.key_fields()) {
    key_bytes += field.avg_length_bytes;
    account(field);
  }
  double value_bytes = 0;
  for (const auto& column : layout_group) {
    const auto& field = schema.value_field(schema.require_value_index(column));
    value_bytes += field.avg_length_bytes;
    account(field);
  }

  fv[Feature::AvgRowLen] = key_bytes + value_bytes;
  fv[Feature::NumKeyFields] = static_cast<double>(schema.key_count());
  fv[Feature::NumValueFields] = static_cast<double>(layout_group.size());
  fv[Feature::KeyBytes] = key_bytes;
  fv[Feature::ValueBytes] = value_bytes;
  fv[Feature::NumFixedFields] = fixed_fields;
  fv[Feature::NumVarFields] = var_fields;
  fv[Feature::FixedBytes] = fixed_bytes;
  fv[Feature::VarBytes] = var_bytes;
  fv[Feature::OpPointLookup] = op.type == OpType::PointLookup ? 1.0 : 0.0;
  fv[Feature::OpRangeScan] = op.type == OpType::RangeScan ? 1.0 : 0.0;
  fv[Feature::OpInsert] = op.type == OpType::Insert ? 1.0 : 0.0;
  fv[Feature::ResultSize] = static_cast<double>(op.result_rows);
  fv[Feature::Selectivity] = std::clamp(op.selectivity, 0.0, 1.0);
  fv[Feature::InsertRandomness] = op.key_randomness.value_or(0.0);
  fv[Feature::DiskReadTput] = state.disk_read_tput;
  fv[Feature::DiskWriteTput] = state.disk_write_tput;
  fv[Feature::CacheRatio] = std::clamp(state.cache_ratio(), 0.0, 1.0);
  fv[Feature::FileCount] = static_cast<double>(state.file_count);
  fv[Feature::L1FileCount] = static_cast<double>(state.l1_file_count);
  fv[Feature::L2FileCount] = static_cast<double>(state.l2_file_count);
  return fv;
}

}  // namespace ssel
