#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ssel/error.hpp"

namespace ssel {

enum class FieldRole { Key, Value };
enum class LengthKind { Fixed, Variable };

// Fixed-length fields model numeric columns, so they never exceed one word.
inline constexpr std::uint32_t kMaxFixedLength = 8;

struct FieldSpec {
  std::string name;
  FieldRole role = FieldRole::Value;
  LengthKind length_kind = LengthKind::Fixed;
  std::uint32_t avg_length_bytes = 1;

  bool operator==(const FieldSpec&) const = default;
};

using ColumnSet = std::set<std::string>;

// Keys form a contiguous prefix of the field list; everything after is a value
// column. Construction validates and throws InvalidSchema.
class TableSchema {
 public:
  TableSchema() = default;
  TableSchema(std::string name, std::vector<FieldSpec> fields);

  const std::string& name() const { return name_; }
  const std::vector<FieldSpec>& fields() const { return fields_; }

  std::size_t key_count() const { return key_count_; }
  std::size_t value_count() const { return fields_.size() - key_count_; }

  std::span<const FieldSpec> key_fields() const { return {fields_.data(), key_count_}; }
  std::span<const FieldSpec> value_fields() const {
    return {fields_.data() + key_count_, fields_.size() - key_count_};
  }

  // Index into value_fields(), or nullopt if the name is not a value column.
  std::optional<std::size_t> value_index(std::string_view column) const;
  // Same, but throws UnknownColumn.
  std::size_t require_value_index(std::string_view column) const;

  const FieldSpec& value_field(std::size_t index) const { return fields_[key_count_ + index]; }

  std::vector<std::string> value_names() const;
  std::uint64_t key_bytes() const;
  std::uint64_t value_bytes() const;

  bool operator==(const TableSchema&) const = default;

 private:
  std::string name_;
  std::vector<FieldSpec> fields_;
  std::size_t key_count_ = 0;
};

enum class OpType { PointLookup, RangeScan, Insert };
enum class OpClass { Read, Write };

inline OpClass op_class(OpType type) { return type == OpType::Insert ? OpClass::Write : OpClass::Read; }

// How an insert orders the fresh key block it appends.
enum class InsertOrder { Sequential, Reverse, Random, ShuffledBlock };

// One data-access operation. `position` anchors reads in the key domain
// (fraction of the current row count; >= 1 probes past the last key), and
// `order`/`order_seed` fix the key order of an insert so the simulator can
// replay it exactly.
struct AccessOp {
  OpType type = OpType::PointLookup;
  ColumnSet columns;  // empty means every value column
  std::uint64_t result_rows = 0;
  double selectivity = 0.0;
  std::optional<double> key_randomness;  // Insert only
  std::uint64_t frequency = 1;
  std::uint64_t age = 0;

  double position = 0.0;
  InsertOrder order = InsertOrder::Sequential;
  std::uint64_t order_seed = 0;

  bool operator==(const AccessOp&) const = default;
};

struct Workload {
  std::string table;
  std::vector<AccessOp> ops;
  std::uint64_t initial_table_rows = 0;
};

// Throws InvalidOperation / UnknownColumn when the op is inconsistent with the schema.
void validate_op(const AccessOp& op, const TableSchema& schema);
void validate_workload(const Workload& workload, const TableSchema& schema);

// Value columns an op touches, resolved against the schema (empty set = all).
ColumnSet effective_columns(const AccessOp& op, const TableSchema& schema);

// Permutation of [0, n) describing the order in which an insert writes its key block.
std::vector<std::uint64_t> insert_permutation(std::uint64_t n, InsertOrder order, std::uint64_t seed);

struct DataLayout {
  std::vector<ColumnSet> groups;

  static DataLayout nsm(const TableSchema& schema);
  static DataLayout dsm(const TableSchema& schema);

  // Groups ordered by their first member in schema order.
  DataLayout canonical(const TableSchema& schema) const;

  bool is_nsm() const { return groups.size() == 1; }
  bool is_dsm(const TableSchema& schema) const { return groups.size() == schema.value_count(); }

  // Order-insensitive comparison of the group partition.
  bool same_partition(const DataLayout& other) const;
};

// Throws UnknownColumn, OverlappingGroups, or MissingColumn.
void validate_layout(const DataLayout& layout, const TableSchema& schema);

// Canonical text form, e.g. "(V1,V4)(V2,V3)". Members and groups follow schema order.
std::string to_string(const DataLayout& layout, const TableSchema& schema);
// Accepts the canonical form plus the shorthands "NSM" and "DSM".
DataLayout parse_layout(std::string_view text, const TableSchema& schema);

// Bytes one row occupies inside a column group: every key field is replicated
// into each group, followed by the group's value columns.
std::uint64_t row_bytes_for_group(const TableSchema& schema, const ColumnSet& group);

enum class EngineKind { BPlusRow, LsmRow, Columnar };

inline constexpr EngineKind kAllEngines[] = {EngineKind::BPlusRow, EngineKind::LsmRow, EngineKind::Columnar};

std::string_view to_string(EngineKind kind);
EngineKind parse_engine(std::string_view text);
std::string_view to_string(OpType type);
std::string_view to_string(OpClass cls);
OpType parse_op_type(std::string_view text);
std::string_view to_string(InsertOrder order);
InsertOrder parse_insert_order(std::string_view text);

struct StorageStructure {
  EngineKind engine = EngineKind::LsmRow;
  DataLayout layout;
};

// Columnar requires one group per value column; throws TargetInvalid otherwise.
void validate_structure(const StorageStructure& structure, const TableSchema& schema);
bool is_valid_structure(const StorageStructure& structure, const TableSchema& schema);
bool same_structure(const StorageStructure& a, const StorageStructure& b);
std::string to_string(const StorageStructure& structure, const TableSchema& schema);

struct Candidate {
  StorageStructure structure;
  double predicted_cost_us = 0.0;
};

}  // namespace ssel
