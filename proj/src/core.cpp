#include "ssel/core.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <unordered_set>

#include "ssel/rng.hpp"

namespace ssel {

TableSchema::TableSchema(std::string name, std::vector<FieldSpec> fields)
    : name_(std::move(name)), fields_(std::move(fields)) {
  if (name_.empty()) throw Error(ErrorCode::InvalidSchema, "schema name is empty");
  std::unordered_set<std::string> seen;
  bool in_keys = true;
  for (const auto& field : fields_) {
    if (field.name.empty()) throw Error(ErrorCode::InvalidSchema, "field with empty name");
    if (!seen.insert(field.name).second) {
      throw Error(ErrorCode::InvalidSchema, "duplicate field '" + field.name + "'");
    }
    if (field.avg_length_bytes < 1) {
      throw Error(ErrorCode::InvalidSchema, "field '" + field.name + "' has zero length");
    }
    if (field.length_kind == LengthKind::Fixed && field.avg_length_bytes > kMaxFixedLength) {
      throw Error(ErrorCode::InvalidSchema, "fixed field '" + field.name + "' longer than 8 bytes");
    }
    if (field.role == FieldRole::Key) {
      if (!in_keys) throw Error(ErrorCode::InvalidSchema, "key field '" + field.name + "' after a value field");
      ++key_count_;
    } else {
      in_keys = false;
    }
  }
  if (key_count_ == 0) throw Error(ErrorCode::InvalidSchema, "schema '" + name_ + "' has no key field");
  if (key_count_ == fields_.size()) {
    throw Error(ErrorCode::InvalidSchema, "schema '" + name_ + "' has no value field");
  }
}

std::optional<std::size_t> TableSchema::value_index(std::string_view column) const {
  for (std::size_t i = key_count_; i < fields_.size(); ++i) {
    if (fields_[i].name == column) return i - key_count_;
  }
  return std::nullopt;
}

std::size_t TableSchema::require_value_index(std::string_view column) const {
  auto index = value_index(column);
  if (!index) throw Error(ErrorCode::UnknownColumn, "'" + std::string(column) + "' is not a value column of " + name_);
  return *index;
}

std::vector<std::string> TableSchema::value_names() const {
  std::vector<std::string> names;
  for (const auto& field : value_fields()) names.push_back(field.name);
  return names;
}

std::uint64_t TableSchema::key_bytes() const {
  std::uint64_t total = 0;
  for (const auto& field : key_fields()) total += field.avg_length_bytes;
  return total;
}

std::uint64_t TableSchema::value_bytes() const {
  std::uint64_t total = 0;
  for (const auto& field : value_fields()) total += field.avg_length_bytes;
  return total;
}

void validate_op(const AccessOp& op, const TableSchema& schema) {
  for (const auto& column : op.columns) schema.require_value_index(column);
  if (op.frequency == 0) throw Error(ErrorCode::InvalidOperation, "frequency must be positive");
  if (!(op.selectivity >= 0.0 && op.selectivity <= 1.0)) {
    throw Error(ErrorCode::InvalidOperation, "selectivity outside [0,1]");
  }
  if (op.type == OpType::Insert) {
    if (!op.key_randomness) throw Error(ErrorCode::InvalidOperation, "insert without key randomness");
    if (*op.key_randomness < 0.0 || *op.key_randomness > 1.0) {
      throw Error(ErrorCode::InvalidOperation, "key randomness outside [0,1]");
    }
    if (op.result_rows == 0) throw Error(ErrorCode::InvalidOperation, "insert of zero rows");
  } else {
    if (op.key_randomness) throw Error(ErrorCode::InvalidOperation, "key randomness on a read");
    if (op.type == OpType::PointLookup && op.result_rows > 1) {
      throw Error(ErrorCode::InvalidOperation, "point lookup returning more than one row");
    }
    if (op.position < 0.0) throw Error(ErrorCode::InvalidOperation, "negative read position");
  }
}

void validate_workload(const Workload& workload, const TableSchema& schema) {
  if (!workload.table.empty() && workload.table != schema.name()) {
    throw Error(ErrorCode::SchemaMismatch, "workload targets '" + workload.table + "', schema is '" + schema.name() + "'");
  }
  for (const auto& op : workload.ops) validate_op(op, schema);
}

ColumnSet effective_columns(const AccessOp& op, const TableSchema& schema) {
  if (op.type == OpType::Insert || op.columns.empty()) {
    auto names = schema.value_names();
    return ColumnSet(names.begin(), names.end());
  }
  return op.columns;
}

std::vector<std::uint64_t> insert_permutation(std::uint64_t n, InsertOrder order, std::uint64_t seed) {
  std::vector<std::uint64_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  switch (order) {
    case InsertOrder::Sequential:
      break;
    case InsertOrder::Reverse:
      std::reverse(perm.begin(), perm.end());
      break;
    case InsertOrder::Random:
      for (std::uint64_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
      break;
    case InsertOrder::ShuffledBlock: {
      // Sorted blocks of ~sqrt(n) keys, visited in shuffled block order.
      std::uint64_t block = 1;
      while (block * block < n) ++block;
      const std::uint64_t blocks = n == 0 ? 0 : (n + block - 1) / block;
      std::vector<std::uint64_t> visit(blocks);
      std::iota(visit.begin(), visit.end(), 0);
      for (std::uint64_t i = blocks; i > 1; --i) std::swap(visit[i - 1], visit[rng.below(i)]);
      std::size_t out = 0;
      for (auto b : visit) {
        for (std::uint64_t k = b * block; k < std::min(n, (b + 1) * block); ++k) perm[out++] = k;
      }
      break;
    }
  }
  return perm;
}

DataLayout DataLayout::nsm(const TableSchema& schema) {
  auto names = schema.value_names();
  return DataLayout{{ColumnSet(names.begin(), names.end())}};
}

DataLayout DataLayout::dsm(const TableSchema& schema) {
  DataLayout layout;
  for (const auto& name : schema.value_names()) layout.groups.push_back(ColumnSet{name});
  return layout;
}

namespace {

std::size_t first_member_index(const ColumnSet& group, const TableSchema& schema) {
  std::size_t best = SIZE_MAX;
  for (const auto& column : group) {
    if (auto index = schema.value_index(column)) best = std::min(best, *index);
  }
  return best;
}

}  // namespace

DataLayout DataLayout::canonical(const TableSchema& schema) const {
  DataLayout out = *this;
  std::stable_sort(out.groups.begin(), out.groups.end(), [&](const ColumnSet& a, const ColumnSet& b) {
    return first_member_index(a, schema) < first_member_index(b, schema);
  });
  return out;
}

bool DataLayout::same_partition(const DataLayout& other) const {
  auto lhs = groups;
  auto rhs = other.groups;
  std::sort(lhs.begin(), lhs.end());
  std::sort(rhs.begin(), rhs.end());
  return lhs == rhs;
}

void validate_layout(const DataLayout& layout, const TableSchema& schema) {
  std::vector<bool> covered(schema.value_count(), false);
  for (const auto& group : layout.groups) {
    if (group.empty()) throw Error(ErrorCode::MissingColumn, "layout contains an empty group");
    for (const auto& column : group) {
      const auto index = schema.require_value_index(column);
      if (covered[index]) throw Error(ErrorCode::OverlappingGroups, "column '" + column + "' is in more than one group");
      covered[index] = true;
    }
  }
  for (std::size_t i = 0; i < covered.size(); ++i) {
    if (!covered[i]) throw Error(ErrorCode::MissingColumn, "column '" + schema.value_field(i).name + "' is in no group");
  }
}

std::string to_string(const DataLayout& layout, const TableSchema& schema) {
  std::string out;
  for (const auto& group : layout.canonical(schema).groups) {
    std::vector<std::pair<std::size_t, std::string>> members;
    for (const auto& column : group) members.emplace_back(schema.value_index(column).value_or(SIZE_MAX), column);
    std::sort(members.begin(), members.end());
    out += '(';
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (i > 0) out += ',';
      out += members[i].second;
    }
    out += ')';
  }
  return out;
}

DataLayout parse_layout(std::string_view text, const TableSchema& schema) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  text = trim(text);
  if (text == "NSM" || text == "nsm") return DataLayout::nsm(schema);
  if (text == "DSM" || text == "dsm") return DataLayout::dsm(schema);

  DataLayout layout;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (std::isspace(static_cast<unsigned char>(text[pos]))) {
      ++pos;
      continue;
    }
    if (text[pos] != '(') throw Error(ErrorCode::InvalidConfig, "malformed layout '" + std::string(text) + "'");
    const auto close = text.find(')', pos);
    if (close == std::string_view::npos) throw Error(ErrorCode::InvalidConfig, "unterminated group in layout");
    ColumnSet group;
    auto body = text.substr(pos + 1, close - pos - 1);
    std::size_t start = 0;
    while (start <= body.size()) {
      auto comma = body.find(',', start);
      if (comma == std::string_view::npos) comma = body.size();
      auto name = trim(body.substr(start, comma - start));
      if (!name.empty()) {
        if (!group.insert(std::string(name)).second) {
          throw Error(ErrorCode::OverlappingGroups, "column '" + std::string(name) + "' repeated in a group");
        }
      }
      start = comma + 1;
    }
    layout.groups.push_back(std::move(group));
    pos = close + 1;
  }
  validate_layout(layout, schema);
  return layout;
}

std::uint64_t row_bytes_for_group(const TableSchema& schema, const ColumnSet& group) {
  std::uint64_t bytes = schema.key_bytes();
  for (const auto& column : group) bytes += schema.value_field(schema.require_value_index(column)).avg_length_bytes;
  return bytes;
}

std::string_view to_string(EngineKind kind) {
  switch (kind) {
    case EngineKind::BPlusRow: return "bplus";
    case EngineKind::LsmRow: return "lsm";
    case EngineKind::Columnar: return "columnar";
  }
  return "?";
}

EngineKind parse_engine(std::string_view text) {
  if (text == "bplus" || text == "btree" || text == "BPlusRow") return EngineKind::BPlusRow;
  if (text == "lsm" || text == "LsmRow") return EngineKind::LsmRow;
  if (text == "columnar" || text == "Columnar") return EngineKind::Columnar;
  throw Error(ErrorCode::InvalidConfig, "unknown engine '" + std::string(text) + "'");
}

std::string_view to_string(OpType type) {
  switch (type) {
    case OpType::PointLookup: return "point";
    case OpType::RangeScan: return "scan";
    case OpType::Insert: return "insert";
  }
  return "?";
}

std::string_view to_string(OpClass cls) { return cls == OpClass::Read ? "read" : "write"; }

OpType parse_op_type(std::string_view text) {
  if (text == "point") return OpType::PointLookup;
  if (text == "scan") return OpType::RangeScan;
  if (text == "insert") return OpType::Insert;
  throw Error(ErrorCode::InvalidConfig, "unknown operation type '" + std::string(text) + "'");
}

std::string_view to_string(InsertOrder order) {
  switch (order) {
    case InsertOrder::Sequential: return "sequential";
    case InsertOrder::Reverse: return "reverse";
    case InsertOrder::Random: return "random";
    case InsertOrder::ShuffledBlock: return "shuffled_block";
  }
  return "?";
}

InsertOrder parse_insert_order(std::string_view text) {
  if (text == "sequential") return InsertOrder::Sequential;
  if (text == "reverse") return InsertOrder::Reverse;
  if (text == "random") return InsertOrder::Random;
  if (text == "shuffled_block") return InsertOrder::ShuffledBlock;
  throw Error(ErrorCode::InvalidConfig, "unknown insert order '" + std::string(text) + "'");
}

void validate_structure(const StorageStructure& structure, const TableSchema& schema) {
  validate_layout(structure.layout, schema);
  if (structure.engine == EngineKind::Columnar && !structure.layout.is_dsm(schema)) {
    throw Error(ErrorCode::TargetInvalid, "columnar engine requires one group per value column");
  }
}

bool is_valid_structure(const StorageStructure& structure, const TableSchema& schema) {
  try {
    validate_structure(structure, schema);
    return true;
  } catch (const Error&) {
    return false;
  }
}

bool same_structure(const StorageStructure& a, const StorageStructure& b) {
  return a.engine == b.engine && a.layout.same_partition(b.layout);
}

std::string to_string(const StorageStructure& structure, const TableSchema& schema) {
  return std::string(to_string(structure.engine)) + ":" + to_string(structure.layout, schema);
}

}  // namespace ssel
