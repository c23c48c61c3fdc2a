#include "doctest.h"
#include "ssel/core.hpp"

using namespace ssel;

namespace {

TableSchema twelve_values() {
  std::vector<FieldSpec> fields{{"K", FieldRole::Key, LengthKind::Fixed, 8}};
  for (int i = 1; i <= 12; ++i) fields.push_back({"V" + std::to_string(i), FieldRole::Value, LengthKind::Fixed, 8});
  return TableSchema("lineitem", std::move(fields));
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("schema validation") {
  CHECK(code_of([] { TableSchema("t", {{"K", FieldRole::Key, LengthKind::Fixed, 8}}); }) == ErrorCode::InvalidSchema);
  CHECK(code_of([] { TableSchema("t", {{"V", FieldRole::Value, LengthKind::Fixed, 8}}); }) ==
        ErrorCode::InvalidSchema);
  CHECK(code_of([] {
          TableSchema("t", {{"K", FieldRole::Key, LengthKind::Fixed, 8}, {"K", FieldRole::Value, LengthKind::Fixed, 4}});
        }) == ErrorCode::InvalidSchema);
  CHECK(code_of([] {
          TableSchema("t", {{"V", FieldRole::Value, LengthKind::Fixed, 4}, {"K", FieldRole::Key, LengthKind::Fixed, 8},
                            {"W", FieldRole::Value, LengthKind::Fixed, 4}});
        }) == ErrorCode::InvalidSchema);
  CHECK(code_of([] {
          TableSchema("t", {{"K", FieldRole::Key, LengthKind::Fixed, 8}, {"V", FieldRole::Value, LengthKind::Fixed, 16}});
        }) == ErrorCode::InvalidSchema);
  CHECK(code_of([] {
          TableSchema("t", {{"K", FieldRole::Key, LengthKind::Fixed, 8}, {"V", FieldRole::Value, LengthKind::Fixed, 0}});
        }) == ErrorCode::InvalidSchema);

  const auto s = twelve_values();
  CHECK(s.key_count() == 1);
  CHECK(s.value_count() == 12);
  CHECK(s.require_value_index("V3") == 2);
  CHECK_FALSE(s.value_index("K").has_value());
  CHECK(code_of([&] { s.require_value_index("nope"); }) == ErrorCode::UnknownColumn);
}

TEST_CASE("validate_layout") {
  const auto s = twelve_values();
  CHECK_NOTHROW(validate_layout(DataLayout::nsm(s), s));
  CHECK_NOTHROW(validate_layout(DataLayout::dsm(s), s));
  CHECK(code_of([&] { validate_layout({{{"V1"}, {"V1", "V2"}}}, s); }) == ErrorCode::OverlappingGroups);
  CHECK(code_of([&] { validate_layout({{{"V1"}, {"V2"}}}, s); }) == ErrorCode::MissingColumn);
  CHECK(code_of([&] { validate_layout({{{"V1", "X"}}}, s); }) == ErrorCode::UnknownColumn);

  const DataLayout split{{{"V2", "V3", "V7"}, {"V1", "V4", "V5", "V6", "V8", "V9", "V10", "V11", "V12"}}};
  CHECK_NOTHROW(validate_layout(split, s));
  CHECK(to_string(split, s) == "(V1,V4,V5,V6,V8,V9,V10,V11,V12)(V2,V3,V7)");
  CHECK(parse_layout(to_string(split, s), s).same_partition(split));
  CHECK(parse_layout("NSM", s).is_nsm());
  CHECK(parse_layout("DSM", s).is_dsm(s));
}

TEST_CASE("row_bytes_for_group") {
  const TableSchema ab("t", {{"K", FieldRole::Key, LengthKind::Fixed, 8},
                             {"a", FieldRole::Value, LengthKind::Fixed, 4},
                             {"b", FieldRole::Value, LengthKind::Fixed, 4}});
  CHECK(row_bytes_for_group(ab, {"a"}) == 12);
  CHECK(row_bytes_for_group(ab, {"a", "b"}) == 16);

  const TableSchema wide("w", {{"K1", FieldRole::Key, LengthKind::Fixed, 8},
                               {"K2", FieldRole::Key, LengthKind::Variable, 12},
                               {"v1", FieldRole::Value, LengthKind::Variable, 60},
                               {"v2", FieldRole::Value, LengthKind::Variable, 40}});
  CHECK(wide.key_bytes() == 20);
  CHECK(wide.value_bytes() == 100);
  CHECK(row_bytes_for_group(wide, {"v1", "v2"}) == 120);
}

TEST_CASE("structure validity") {
  const auto s = twelve_values();
  CHECK(is_valid_structure({EngineKind::Columnar, DataLayout::dsm(s)}, s));
  CHECK_FALSE(is_valid_structure({EngineKind::Columnar, DataLayout::nsm(s)}, s));
  CHECK(code_of([&] { validate_structure({EngineKind::Columnar, DataLayout::nsm(s)}, s); }) ==
        ErrorCode::TargetInvalid);
  for (auto e : kAllEngines) CHECK(parse_engine(to_string(e)) == e);
  CHECK(same_structure({EngineKind::LsmRow, DataLayout::dsm(s)}, {EngineKind::LsmRow, DataLayout::dsm(s)}));
  CHECK_FALSE(same_structure({EngineKind::LsmRow, DataLayout::dsm(s)}, {EngineKind::BPlusRow, DataLayout::dsm(s)}));
}

TEST_CASE("op validation") {
  const auto s = twelve_values();
  AccessOp point;
  point.type = OpType::PointLookup;
  point.result_rows = 1;
  CHECK_NOTHROW(validate_op(point, s));
  point.result_rows = 2;
  CHECK(code_of([&] { validate_op(point, s); }) == ErrorCode::InvalidOperation);

  AccessOp scan;
  scan.type = OpType::RangeScan;
  scan.columns = {"V99"};
  scan.result_rows = 10;
  CHECK(code_of([&] { validate_op(scan, s); }) == ErrorCode::UnknownColumn);

  AccessOp bad_read = point;
  bad_read.result_rows = 1;
  bad_read.key_randomness = 0.5;
  CHECK(code_of([&] { validate_op(bad_read, s); }) == ErrorCode::InvalidOperation);

  CHECK(effective_columns(point, s).size() == 12);
}

TEST_CASE("insert permutations are permutations") {
  for (auto order : {InsertOrder::Sequential, InsertOrder::Reverse, InsertOrder::Random, InsertOrder::ShuffledBlock}) {
    auto p = insert_permutation(257, order, 42);
    std::sort(p.begin(), p.end());
    for (std::uint64_t i = 0; i < p.size(); ++i) REQUIRE(p[i] == i);
    CHECK(insert_permutation(257, order, 42) == insert_permutation(257, order, 42));
  }
  const auto seq = insert_permutation(5, InsertOrder::Sequential, 0);
  CHECK(seq == std::vector<std::uint64_t>{0, 1, 2, 3, 4});
  const auto rev = insert_permutation(5, InsertOrder::Reverse, 0);
  CHECK(rev == std::vector<std::uint64_t>{4, 3, 2, 1, 0});
}

TEST_CASE("error codes carry their name") {
  const Error e(ErrorCode::KeyNotFound, "k");
  CHECK(e.code() == ErrorCode::KeyNotFound);
  CHECK(std::string(e.what()).find(to_string(ErrorCode::KeyNotFound)) == 0);
}
