#include <algorithm>

#include "../common/properties.hpp"
#include "doctest.h"
#include "ssel/layout.hpp"

using namespace ssel;

namespace {

TableSchema abcde() {
  std::vector<FieldSpec> fields{{"K", FieldRole::Key, LengthKind::Fixed, 8}};
  for (const char* c : {"a", "b", "c", "d", "e"}) fields.push_back({c, FieldRole::Value, LengthKind::Fixed, 4});
  return TableSchema("t", std::move(fields));
}

AccessOp read(ColumnSet cols, std::uint64_t age = 0) {
  AccessOp op;
  op.type = OpType::RangeScan;
  op.columns = std::move(cols);
  op.result_rows = 10;
  op.age = age;
  return op;
}

std::vector<std::string> names(const std::vector<DataLayout>& layouts, const TableSchema& s) {
  std::vector<std::string> out;
  for (const auto& l : layouts) out.push_back(to_string(l, s));
  return out;
}

const QueryCost unit_cost = [](const AccessOp&) { return 1.0; };

}  // namespace

TEST_CASE("prune weights by age decay") {
  const auto s = abcde();
  Workload w{"t", {read({"a", "b"}, 0), read({"a", "b"}, 1)}, 100};
  auto reps = prune(w, s, unit_cost, {0.5, 0.0});
  REQUIRE(reps.size() == 1);
  CHECK(reps[0].weight == doctest::Approx(1.5));
  CHECK(reps[0].member_count == 2);

  reps = prune(w, s, unit_cost, {0.0, 0.0});
  CHECK(reps[0].weight == doctest::Approx(2.0));

  Workload two{"t", {read({"a", "b", "c"}), read({"a", "b", "c"}), read({"c", "d", "e"})}, 100};
  reps = prune(two, s, unit_cost);
  REQUIRE(reps.size() == 2);
  CHECK(reps[0].columns == ColumnSet{"a", "b", "c"});
  CHECK(reps[0].weight == doctest::Approx(2.0));
  CHECK(reps[1].columns == ColumnSet{"c", "d", "e"});

  Workload rare{"t", {read({"a"})}, 100};
  for (int i = 0; i < 200; ++i) rare.ops.push_back(read({"b"}));
  CHECK(prune(rare, s, unit_cost).size() == 1);

  Workload writes{"t", {make_insert(5, InsertOrder::Sequential, 0)}, 100};
  CHECK_THROWS_AS(prune(writes, s, unit_cost), Error);
}

TEST_CASE("vectorize") {
  const std::vector<std::string> cols{"a", "b", "c", "d", "e", "f"};
  const std::vector<RepresentativeQuery> reps{{{"a", "b", "c"}, 1.0, 1}, {{"c", "d", "e"}, 1.0, 1}};
  const auto v = vectorize(cols, reps);
  REQUIRE(v.size() == 6);
  CHECK(v[0].coords == std::vector<double>{1, 0});
  CHECK(v[1].coords == std::vector<double>{1, 0});
  CHECK(v[2].coords == std::vector<double>{1, 1});
  CHECK(v[3].coords == std::vector<double>{0, 1});
  CHECK(v[4].coords == std::vector<double>{0, 1});
  CHECK(v[5].coords == std::vector<double>{0, 0});

  auto doubled = reps;
  for (auto& r : doubled) r.weight *= 2;
  const auto v2 = vectorize(cols, doubled);
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = 0; j < v[i].coords.size(); ++j) CHECK(v2[i].coords[j] == 2 * v[i].coords[j]);
  }
}

TEST_CASE("cluster") {
  const auto v = vectorize({"a", "b", "c", "d", "e"}, {{{"a", "b", "c"}, 2.0, 1}, {{"c", "d", "e"}, 1.0, 1}});
  const auto d = cluster(v);
  CHECK(d.leaves.size() == 5);
  REQUIRE(d.merges.size() == 4);
  CHECK(d.merges[0].distance == 0.0);
  CHECK(d.merges[1].distance == 0.0);
  for (std::size_t i = 1; i < d.merges.size(); ++i) CHECK(d.merges[i].distance >= d.merges[i - 1].distance);

  const auto single = cluster({{"x", {1.0}}});
  CHECK(single.leaves.size() == 1);
  CHECK(single.merges.empty());
}

TEST_CASE("recommend_layouts on the five-column example") {
  const auto s = abcde();
  const std::vector<RepresentativeQuery> reps{{{"a", "b", "c"}, 2.0, 1}, {{"c", "d", "e"}, 1.0, 1}};
  CHECK(names(recommend_layouts(reps, s), s) ==
        std::vector<std::string>{"(a,b,c,d,e)", "(a,b,c)(d,e)", "(a,b)(c)(d,e)", "(a)(b)(c)(d)(e)"});

  Workload w{"t", {read({"a", "b", "c"}), read({"a", "b", "c"}), read({"c", "d", "e"})}, 100};
  CHECK(recommend_layouts(w, s, unit_cost).size() == 4);

  Workload all{"t", {read({}), read({"a", "b", "c", "d", "e"})}, 100};
  CHECK(names(recommend_layouts(all, s, unit_cost), s) == std::vector<std::string>{"(a,b,c,d,e)", "(a)(b)(c)(d)(e)"});

  Workload none{"t", {make_insert(5, InsertOrder::Sequential, 0)}, 100};
  CHECK(recommend_layouts(none, s, unit_cost).size() == 2);
}

TEST_CASE("recommend_layouts includes the split for the wide-table scans") {
  std::vector<FieldSpec> fields{{"K", FieldRole::Key, LengthKind::Fixed, 8}};
  for (int i = 1; i <= 12; ++i) fields.push_back({"V" + std::to_string(i), FieldRole::Value, LengthKind::Fixed, 8});
  const TableSchema s("lineitem", std::move(fields));
  const std::vector<RepresentativeQuery> reps{{{"V2", "V3", "V7"}, 5.0, 1}, {{"V2", "V3"}, 2.0, 1}};
  const auto layouts = recommend_layouts(reps, s);
  const auto split = parse_layout("(V2,V3,V7)(V1,V4,V5,V6,V8,V9,V10,V11,V12)", s);
  CHECK(std::any_of(layouts.begin(), layouts.end(), [&](const DataLayout& l) { return l.same_partition(split); }));
}

TEST_CASE("query-oriented baseline") {
  const auto s = abcde();
  const std::vector<RepresentativeQuery> reps{{{"a", "b", "c"}, 2.0, 1}, {{"c", "d", "e"}, 1.0, 1}};
  auto qo = names(recommend_layouts_query_oriented(reps, s), s);
  std::sort(qo.begin(), qo.end());
  CHECK(qo == std::vector<std::string>{"(a,b)(c,d,e)", "(a,b,c)(d,e)"});

  const auto nsm = recommend_layouts_query_oriented({{{"a", "b", "c", "d", "e"}, 1.0, 1}}, s);
  REQUIRE(nsm.size() == 1);
  CHECK(nsm[0].is_nsm());
}

TEST_CASE("query-oriented matches the dendrogram on disjoint queries") {
  Rng rng(31);
  for (int t = 0; t < 200; ++t) {
    const auto s = props::random_schema(rng, 2, 6);
    auto names_left = s.value_names();
    for (std::size_t i = names_left.size(); i > 1; --i) std::swap(names_left[i - 1], names_left[rng.below(i)]);
    std::vector<RepresentativeQuery> reps;
    const auto groups = rng.range(1, names_left.size());
    for (std::uint64_t g = 0; g < groups; ++g) reps.push_back({{}, 1.0 + static_cast<double>(g), 1});
    for (std::size_t i = 0; i < names_left.size(); ++i) reps[i < groups ? i : rng.below(groups)].columns.insert(names_left[i]);

    const auto dendro = recommend_layouts(reps, s);
    for (const auto& q : recommend_layouts_query_oriented(reps, s)) {
      REQUIRE(std::any_of(dendro.begin(), dendro.end(), [&](const DataLayout& l) { return l.same_partition(q); }));
    }
  }
}

TEST_CASE("all_layouts enumerates set partitions") {
  const auto s = abcde();
  CHECK(all_layouts(s).size() == 52);
  for (const auto& l : all_layouts(s)) validate_layout(l, s);
}

TEST_CASE("layout properties") {
  CHECK(props::check_refinement_chain(1, 100) == "");
  CHECK(props::check_scale_invariance(2, 60) == "");
}
