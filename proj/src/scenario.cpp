#include "ssel/scenario.hpp"

#include <algorithm>
#include <cmath>

#include "ssel/perf_io.hpp"
#include "ssel/rng.hpp"

namespace ssel {

using nlohmann::json;

namespace {

constexpr int kScenarioVersion = 1;

const QueryTemplate& find_query(const ScenarioSpec& spec, const std::string& name) {
  for (const auto& q : spec.queries) {
    if (q.name == name) return q;
  }
  throw Error(ErrorCode::InvalidConfig, "mix names unknown query '" + name + "'");
}

}  // namespace

TableSchema schema_from_json(const json& j) {
  std::vector<FieldSpec> fields;
  for (const auto& f : j.at("fields")) {
    FieldSpec spec;
    spec.name = f.at("name").get<std::string>();
    const auto role = f.at("role").get<std::string>();
    if (role != "key" && role != "value") throw Error(ErrorCode::InvalidSchema, "unknown field role '" + role + "'");
    spec.role = role == "key" ? FieldRole::Key : FieldRole::Value;
    const auto length = f.value("length", std::string("fixed"));
    if (length != "fixed" && length != "variable") {
      throw Error(ErrorCode::InvalidSchema, "unknown length kind '" + length + "'");
    }
    spec.length_kind = length == "fixed" ? LengthKind::Fixed : LengthKind::Variable;
    spec.avg_length_bytes = f.at("bytes").get<std::uint32_t>();
    fields.push_back(std::move(spec));
  }
  return TableSchema(j.at("name").get<std::string>(), std::move(fields));
}

json to_json(const TableSchema& schema) {
  json fields = json::array();
  for (const auto& f : schema.fields()) {
    fields.push_back({{"name", f.name},
                      {"role", f.role == FieldRole::Key ? "key" : "value"},
                      {"length", f.length_kind == LengthKind::Fixed ? "fixed" : "variable"},
                      {"bytes", f.avg_length_bytes}});
  }
  return {{"name", schema.name()}, {"fields", fields}};
}

ScenarioSpec scenario_from_json(const json& j) {
  try {
    if (j.value("version", kScenarioVersion) != kScenarioVersion) {
      throw Error(ErrorCode::UnsupportedVersion, "scenario version " + j["version"].dump());
    }
    ScenarioSpec s;
    s.name = j.value("name", std::string("scenario"));
    s.seed = j.value("seed", std::uint64_t{1});
    s.schema = schema_from_json(j.at("schema"));
    s.initial_table_rows = j.value("initial_table_rows", std::uint64_t{0});
    for (const auto& q : j.at("queries")) {
      QueryTemplate t;
      t.name = q.at("name").get<std::string>();
      t.type = parse_op_type(q.at("type").get<std::string>());
      if (q.contains("columns")) {
        for (const auto& c : q["columns"]) {
          const auto name = c.get<std::string>();
          s.schema.require_value_index(name);
          t.columns.insert(name);
        }
      }
      t.rows = q.value("rows", std::uint64_t{1});
      t.order = parse_insert_order(q.value("order", std::string("sequential")));
      t.fraction = q.value("fraction", 0.0);
      if (t.type == OpType::Insert && t.rows == 0) throw Error(ErrorCode::InvalidConfig, t.name + ": insert of zero rows");
      if (t.type == OpType::RangeScan && !(t.fraction > 0.0 && t.fraction <= 1.0)) {
        throw Error(ErrorCode::InvalidConfig, t.name + ": scan fraction must lie in (0,1]");
      }
      s.queries.push_back(std::move(t));
    }
    for (const auto& m : j.at("mix")) {
      s.mix.emplace_back(m.at(0).get<std::string>(), m.at(1).get<std::uint64_t>());
      find_query(s, s.mix.back().first);
    }
    if (j.contains("current")) {
      s.current.engine = parse_engine(j["current"].value("engine", std::string("lsm")));
      s.current.layout = parse_layout(j["current"].value("layout", std::string("NSM")), s.schema);
    } else {
      s.current = {EngineKind::LsmRow, DataLayout::nsm(s.schema)};
    }
    validate_structure(s.current, s.schema);
    s.age_window = j.value("age_window", std::uint64_t{1000});
    s.decay_alpha = j.value("decay_alpha", 0.05);
    s.epsilon = j.value("epsilon", 0.1);
    if (s.age_window == 0) throw Error(ErrorCode::InvalidConfig, "age_window must be positive");
    if (j.contains("sim")) s.sim = sim_config_from_json(j["sim"]);
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("scenario: ") + e.what());
  }
}

json to_json(const ScenarioSpec& s) {
  json queries = json::array();
  for (const auto& q : s.queries) {
    json jq = {{"name", q.name}, {"type", std::string(to_string(q.type))}};
    if (q.type == OpType::Insert) {
      jq["rows"] = q.rows;
      jq["order"] = std::string(to_string(q.order));
    } else {
      jq["columns"] = std::vector<std::string>(q.columns.begin(), q.columns.end());
      if (q.type == OpType::RangeScan) jq["fraction"] = q.fraction;
    }
    queries.push_back(jq);
  }
  json mix = json::array();
  for (const auto& [name, count] : s.mix) mix.push_back({name, count});
  return {{"version", kScenarioVersion},
          {"name", s.name},
          {"seed", s.seed},
          {"schema", to_json(s.schema)},
          {"initial_table_rows", s.initial_table_rows},
          {"queries", queries},
          {"mix", mix},
          {"current",
           {{"engine", std::string(to_string(s.current.engine))}, {"layout", to_string(s.current.layout, s.schema)}}},
          {"age_window", s.age_window},
          {"decay_alpha", s.decay_alpha},
          {"epsilon", s.epsilon}};
}

ScenarioSpec read_scenario(const std::filesystem::path& path) { return scenario_from_json(read_json_file(path)); }

Workload resolve_workload(const ScenarioSpec& spec) {
  std::vector<const QueryTemplate*> sequence;
  for (const auto& [name, count] : spec.mix) {
    const auto& q = find_query(spec, name);
    sequence.insert(sequence.end(), count, &q);
  }
  Rng rng(spec.seed);
  for (std::size_t i = sequence.size(); i > 1; --i) std::swap(sequence[i - 1], sequence[rng.below(i)]);

  Workload w;
  w.table = spec.schema.name();
  w.initial_table_rows = spec.initial_table_rows;
  std::uint64_t rows = spec.initial_table_rows;
  const std::uint64_t n = sequence.size();
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto& q = *sequence[i];
    AccessOp op;
    if (q.type == OpType::Insert) {
      op = make_insert(q.rows, q.order, rng.next());
      rows += q.rows;
    } else {
      op.type = q.type;
      op.columns = q.columns;
      op.position = rng.uniform();
      op.result_rows = q.type == OpType::PointLookup
                           ? 1
                           : std::max<std::uint64_t>(
                                 1, static_cast<std::uint64_t>(std::llround(q.fraction * static_cast<double>(rows))));
    }
    op.age = (n - 1 - i) / spec.age_window;
    w.ops.push_back(std::move(op));
  }
  return w;
}

EnginePartition build_partition(const ScenarioSpec& spec, const StorageStructure& structure) {
  EnginePartition p(spec.schema, structure, spec.sim, Rng::mix(spec.seed ^ 0x5eedULL));
  p.bulk_load(spec.initial_table_rows);
  return p;
}

SimulationResult simulate(const ScenarioSpec& spec, const Workload& workload, const StorageStructure& structure) {
  auto partition = build_partition(spec, structure);
  SimulationResult r;
  double read_tput = 0, write_tput = 0, cached = 0, total = 0, files = 0, l1 = 0, l2 = 0;
  for (const auto& op : workload.ops) {
    for (std::uint64_t k = 0; k < op.frequency; ++k) {
      const auto t = partition.exec(op);
      r.total_us += t.elapsed_us;
      (op.type == OpType::Insert ? r.write_us : r.read_us) += t.elapsed_us;
      ++r.ops;
      read_tput += t.state_before.disk_read_tput;
      write_tput += t.state_before.disk_write_tput;
      cached += static_cast<double>(t.state_before.cached_pages);
      total += static_cast<double>(t.state_before.total_pages);
      files += static_cast<double>(t.state_before.file_count);
      l1 += static_cast<double>(t.state_before.l1_file_count);
      l2 += static_cast<double>(t.state_before.l2_file_count);
    }
  }
  if (r.ops > 0) {
    const double n = static_cast<double>(r.ops);
    auto round = [](double v) { return static_cast<std::uint64_t>(std::llround(v)); };
    r.mean_state.disk_read_tput = read_tput / n;
    r.mean_state.disk_write_tput = write_tput / n;
    r.mean_state.total_pages = std::max<std::uint64_t>(round(total / n), 1);
    r.mean_state.cached_pages = std::min(round(cached / n), r.mean_state.total_pages);
    r.mean_state.l1_file_count = round(l1 / n);
    r.mean_state.l2_file_count = round(l2 / n);
    r.mean_state.file_count = std::max(round(files / n), r.mean_state.l1_file_count + r.mean_state.l2_file_count);
  } else {
    r.mean_state = partition.runtime_state();
  }
  return r;
}

SimulationResult simulate(const ScenarioSpec& spec, const StorageStructure& structure) {
  return simulate(spec, resolve_workload(spec), structure);
}

AdvisorRun advise(const ScenarioSpec& spec, const CostModel& model, double epsilon) {
  AdvisorRun run;
  const auto workload = resolve_workload(spec);
  run.observed = simulate(spec, workload, spec.current).mean_state;

  std::map<std::pair<ColumnSet, std::uint64_t>, double> cost_memo;
  const QueryCost cost = [&](const AccessOp& op) {
    const auto resolved = resolve_op(op, spec.initial_table_rows);
    auto key = std::pair{effective_columns(op, spec.schema),
                         resolved.result_rows + (op.type == OpType::RangeScan ? 0 : (1ULL << 63))};
    auto it = cost_memo.find(key);
    if (it != cost_memo.end()) return it->second;
    AccessOp single = op;
    single.frequency = 1;
    Workload one{workload.table, {single}, spec.initial_table_rows};
    const auto state =
        candidate_state(run.observed, spec.current, spec.current, spec.schema, spec.initial_table_rows, spec.sim.page_size);
    const double c =
        predict_workload(model, spec.current, spec.schema, one, state, {spec.sim.page_size, spec.sim.lsm_file_pages, false});
    cost_memo.emplace(key, c);
    return c;
  };
  run.layouts = recommend_layouts(workload, spec.schema, cost, {spec.decay_alpha, 0.01});
  run.candidates = generate_candidates(run.layouts, kAllEngines, spec.schema);
  run.recommendation =
      evaluate(run.candidates, workload, spec.schema, &model, run.observed, spec.current, {epsilon, spec.sim.page_size, spec.sim.lsm_file_pages});
  return run;
}

}  // namespace ssel
