#pragma once

// Randomized property checks shared by the unit tests and the acceptance run.
// Each returns an empty string on success or a description of the first failure.

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "ssel/advisor.hpp"
#include "ssel/converter.hpp"
#include "ssel/engine_sim.hpp"
#include "ssel/gbdt.hpp"
#include "ssel/layout.hpp"
#include "ssel/rng.hpp"

namespace ssel::props {

inline TableSchema random_schema(Rng& rng, std::size_t min_values, std::size_t max_values) {
  std::vector<FieldSpec> fields;
  const auto keys = rng.range(1, 2);
  for (std::uint64_t k = 0; k < keys; ++k) {
    fields.push_back({"K" + std::to_string(k + 1), FieldRole::Key, LengthKind::Fixed,
                      static_cast<std::uint32_t>(rng.range(4, 8))});
  }
  const auto values = rng.range(min_values, max_values);
  for (std::uint64_t v = 0; v < values; ++v) {
    const bool var = rng.bernoulli(0.3);
    fields.push_back({"V" + std::to_string(v + 1), FieldRole::Value, var ? LengthKind::Variable : LengthKind::Fixed,
                      static_cast<std::uint32_t>(var ? rng.range(5, 60) : rng.range(1, 8))});
  }
  return TableSchema("t", std::move(fields));
}

inline ColumnSet random_columns(Rng& rng, const TableSchema& schema) {
  ColumnSet cols;
  for (const auto& name : schema.value_names()) {
    if (rng.bernoulli(0.4)) cols.insert(name);
  }
  if (cols.empty()) cols.insert(schema.value_names()[rng.below(schema.value_count())]);
  return cols;
}

inline std::vector<RepresentativeQuery> random_reps(Rng& rng, const TableSchema& schema, std::size_t max_reps) {
  std::vector<RepresentativeQuery> reps;
  const auto n = rng.range(1, max_reps);
  for (std::uint64_t i = 0; i < n; ++i) {
    reps.push_back({random_columns(rng, schema), 0.5 + 10.0 * rng.uniform(), 1});
  }
  return reps;
}

inline std::string check_refinement_chain(std::uint64_t seed, int trials) {
  Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    const auto schema = random_schema(rng, 2, 10);
    const auto reps = random_reps(rng, schema, 5);
    const auto layouts = recommend_layouts(reps, schema);
    if (layouts.empty() || !layouts.front().is_nsm() || !layouts.back().is_dsm(schema)) {
      return "trial " + std::to_string(t) + ": chain does not run from NSM to DSM";
    }
    for (std::size_t i = 0; i < layouts.size(); ++i) {
      validate_layout(layouts[i], schema);
      if (i > 0 && !refines(layouts[i], layouts[i - 1])) {
        return "trial " + std::to_string(t) + ": level " + std::to_string(i) + " " + to_string(layouts[i], schema) +
               " does not refine " + to_string(layouts[i - 1], schema);
      }
      if (i > 0 && layouts[i].groups.size() <= layouts[i - 1].groups.size()) {
        return "trial " + std::to_string(t) + ": group count not increasing";
      }
    }
  }
  return {};
}

inline std::string check_scale_invariance(std::uint64_t seed, int trials) {
  Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    const auto schema = random_schema(rng, 2, 10);
    const auto reps = random_reps(rng, schema, 5);
    const auto base = recommend_layouts(reps, schema);
    for (double c : {1e-3, 0.37, 3.7, 1e6}) {
      auto scaled = reps;
      for (auto& r : scaled) r.weight *= c;
      const auto other = recommend_layouts(scaled, schema);
      if (other.size() != base.size()) return "trial " + std::to_string(t) + ": level count changed under scaling";
      for (std::size_t i = 0; i < base.size(); ++i) {
        if (to_string(base[i], schema) != to_string(other[i], schema)) {
          return "trial " + std::to_string(t) + ": layout changed under scaling by " + std::to_string(c);
        }
      }
    }
  }
  return {};
}

inline std::vector<AccessOp> random_ops(Rng& rng, const TableSchema& schema, std::size_t count) {
  std::vector<AccessOp> ops;
  for (std::size_t i = 0; i < count; ++i) {
    const double u = rng.uniform();
    AccessOp op;
    if (u < 0.4) {
      static constexpr InsertOrder orders[] = {InsertOrder::Sequential, InsertOrder::Reverse, InsertOrder::Random,
                                               InsertOrder::ShuffledBlock};
      op = make_insert(rng.bernoulli(0.5) ? 1 : rng.range(2, 1500), orders[rng.below(4)], rng.next());
    } else if (u < 0.7) {
      op.type = OpType::PointLookup;
      op.columns = rng.bernoulli(0.3) ? ColumnSet{} : random_columns(rng, schema);
      op.result_rows = 1;
      op.position = rng.bernoulli(0.1) ? 1.5 : rng.uniform();
    } else {
      op.type = OpType::RangeScan;
      op.columns = rng.bernoulli(0.3) ? ColumnSet{} : random_columns(rng, schema);
      op.result_rows = rng.range(1, 3000);
      op.position = rng.uniform();
    }
    ops.push_back(std::move(op));
  }
  return ops;
}

inline std::vector<StorageStructure> sample_structures(Rng& rng, const TableSchema& schema) {
  std::vector<StorageStructure> out{{EngineKind::BPlusRow, DataLayout::nsm(schema)},
                                    {EngineKind::LsmRow, DataLayout::nsm(schema)},
                                    {EngineKind::Columnar, DataLayout::dsm(schema)},
                                    {EngineKind::LsmRow, DataLayout::dsm(schema)}};
  const auto reps = random_reps(rng, schema, 3);
  for (const auto& l : recommend_layouts(reps, schema)) out.push_back({EngineKind::BPlusRow, l});
  return out;
}

inline std::string check_simulator_determinism(std::uint64_t seed, int trials) {
  Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    const auto schema = random_schema(rng, 1, 8);
    const auto ops = random_ops(rng, schema, 300);
    for (const auto& s : sample_structures(rng, schema)) {
      EnginePartition a(schema, s, {}, 77), b(schema, s, {}, 77);
      a.bulk_load(3000);
      b.bulk_load(3000);
      const auto ta = run_workload(a, ops), tb = run_workload(b, ops);
      for (std::size_t i = 0; i < ta.size(); ++i) {
        if (ta[i].elapsed_us != tb[i].elapsed_us || ta[i].surge != tb[i].surge ||
            ta[i].result_digest != tb[i].result_digest || !(ta[i].state_before == tb[i].state_before)) {
          return "trial " + std::to_string(t) + ": traces diverge at op " + std::to_string(i) + " under " +
                 to_string(s, schema);
        }
      }
    }
  }
  return {};
}

inline std::string check_logical_content_invariance(std::uint64_t seed, int trials) {
  Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    const auto schema = random_schema(rng, 1, 8);
    const auto ops = random_ops(rng, schema, 300);
    const auto structures = sample_structures(rng, schema);
    std::vector<std::uint64_t> reference;
    std::optional<Snapshot> reference_snapshot;
    for (const auto& s : structures) {
      EnginePartition p(schema, s, {}, 99);
      p.bulk_load(2000);
      const auto traces = run_workload(p, ops);
      std::vector<std::uint64_t> digests;
      for (const auto& tr : traces) digests.push_back(tr.result_digest ^ (tr.op.result_rows << 1) ^ tr.key_not_found);
      if (!reference_snapshot) {
        reference = digests;
        reference_snapshot = p.snapshot();
        continue;
      }
      if (digests != reference) return "trial " + std::to_string(t) + ": results differ under " + to_string(s, schema);
      if (!(p.snapshot() == *reference_snapshot)) {
        return "trial " + std::to_string(t) + ": final content differs under " + to_string(s, schema);
      }
    }
  }
  return {};
}

inline std::string check_conversion(std::uint64_t seed, const std::filesystem::path& scratch) {
  Rng rng(seed);
  const auto schema = random_schema(rng, 3, 8);
  EnginePartition original(schema, {EngineKind::LsmRow, DataLayout::nsm(schema)}, {}, 5);
  original.bulk_load(4000);
  run_workload(original, random_ops(rng, schema, 200));
  const auto content = original.snapshot();

  auto dsm = convert(original, {EngineKind::BPlusRow, DataLayout::dsm(schema)});
  auto back = convert(dsm, {EngineKind::LsmRow, DataLayout::nsm(schema)});
  if (!(dsm.snapshot() == content) || !(back.snapshot() == content)) return "NSM->DSM->NSM changed the content";

  std::filesystem::remove_all(scratch);
  ManifestStore store(scratch, "p0");
  store.init(original);
  std::uint64_t generation = store.load().generation;
  const auto target = StorageStructure{EngineKind::Columnar, DataLayout::dsm(schema)};
  for (auto fp : {FailPoint::AfterBuild, FailPoint::CorruptBuild, FailPoint::AfterDataWrite}) {
    bool threw = false;
    try {
      convert(original, target, {&store, fp});
    } catch (const Error&) {
      threw = true;
    }
    const auto m = store.load();
    if (!threw) return "injected failure did not abort the conversion";
    if (m.generation != generation || m.structure.engine != EngineKind::LsmRow) {
      return "injected failure changed the active generation";
    }
    if (!(store.open().snapshot() == content)) return "active generation content changed after injected failure";
  }
  for (const auto& s : sample_structures(rng, schema)) {
    convert(store.open(), s, {&store, FailPoint::None});
    const auto m = store.load();
    if (m.generation <= generation) return "generation did not strictly increase";
    generation = m.generation;
    if (!(store.open().snapshot() == content)) return "conversion to " + to_string(s, schema) + " changed the content";
  }
  std::filesystem::remove_all(scratch);
  return {};
}

inline std::string check_epsilon_monotonicity(std::uint64_t seed, int trials) {
  Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    const double current = 1.0 + 1000.0 * rng.uniform();
    const double best = current * (0.5 + rng.uniform());
    double prev = -1.0;
    Decision prev_decision = Decision::Apply;
    for (int k = 0; k <= 20; ++k) {
      const double eps = k / 20.0;
      const auto d = epsilon_rule(current, best, eps);
      if (prev >= 0.0 && prev_decision == Decision::Hold && d == Decision::Apply) {
        return "raising epsilon turned Hold into Apply";
      }
      prev = eps;
      prev_decision = d;
    }
  }
  return {};
}

inline std::string check_boosting_monotonicity(std::uint64_t seed, int trials) {
  Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    const std::size_t n = 400;
    std::vector<FeatureRow> x(n);
    std::vector<double> y(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& v : x[i]) v = rng.uniform() * 10.0;
      x[i][3] = std::floor(x[i][3]);
      y[i] = std::sin(x[i][0]) + 0.3 * x[i][1] * x[i][3] + rng.normal();
      w[i] = t % 2 == 0 ? 1.0 : 0.5 + rng.uniform();
    }
    GbdtParams params;
    params.num_trees = 60;
    params.learning_rate = 0.1 + 0.9 * rng.uniform();
    const auto model = BoostedRegressor::fit(x, y, w, params);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k <= model.trees().size(); ++k) {
      double sse = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - model.predict_prefix(x[i], k);
        sse += w[i] * e * e;
      }
      if (sse > prev * (1.0 + 1e-12)) return "training error rose at tree " + std::to_string(k);
      prev = sse;
    }
  }
  return {};
}

}  // namespace ssel::props
