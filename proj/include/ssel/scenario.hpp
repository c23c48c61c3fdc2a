#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "ssel/advisor.hpp"
#include "ssel/engine_sim.hpp"
#include "ssel/layout.hpp"

namespace ssel {

// A named query template; `mix` says how many times each one runs.
struct QueryTemplate {
  std::string name;
  OpType type = OpType::PointLookup;
  ColumnSet columns;
  std::uint64_t rows = 1;        // Insert batch size
  InsertOrder order = InsertOrder::Sequential;
  double fraction = 0.0;         // RangeScan length as a fraction of the table
};

struct ScenarioSpec {
  std::string name;
  std::uint64_t seed = 1;
  TableSchema schema;
  std::uint64_t initial_table_rows = 0;
  std::vector<QueryTemplate> queries;
  std::vector<std::pair<std::string, std::uint64_t>> mix;
  StorageStructure current;
  std::uint64_t age_window = 1000;
  double decay_alpha = 0.05;
  double epsilon = 0.1;
  SimConfig sim;
};

ScenarioSpec scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScenarioSpec& spec);
ScenarioSpec read_scenario(const std::filesystem::path& path);
TableSchema schema_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TableSchema& schema);

// Expands the mix into single ops in a seeded interleaving. Scan lengths follow
// the table as inserts grow it; ages count age_window-sized buckets back from
// the most recent op.
Workload resolve_workload(const ScenarioSpec& spec);

// Fresh partition holding the scenario's initial rows under `structure`.
EnginePartition build_partition(const ScenarioSpec& spec, const StorageStructure& structure);

struct SimulationResult {
  double total_us = 0.0;
  double read_us = 0.0;
  double write_us = 0.0;
  std::uint64_t ops = 0;
  RuntimeState mean_state;  // average of the state each op started from
};

// Ground truth: runs the workload on a fresh partition and measures it.
SimulationResult simulate(const ScenarioSpec& spec, const Workload& workload, const StorageStructure& structure);
SimulationResult simulate(const ScenarioSpec& spec, const StorageStructure& structure);

struct AdvisorRun {
  std::vector<DataLayout> layouts;
  std::vector<StorageStructure> candidates;
  Recommendation recommendation;
  RuntimeState observed;
};

// The full pipeline for one scenario: observe the current structure, prune and
// cluster the workload into layouts, cross them with the engines and evaluate.
AdvisorRun advise(const ScenarioSpec& spec, const CostModel& model, double epsilon);

}  // namespace ssel
