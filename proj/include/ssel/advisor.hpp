#pragma once

#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ssel/core.hpp"
#include "ssel/features.hpp"
#include "ssel/learner.hpp"

namespace ssel {

enum class Decision { Apply, Hold };

struct Recommendation {
  StorageStructure current;
  double current_cost_us = 0.0;
  std::vector<Candidate> candidates;  // ascending predicted cost
  std::optional<StorageStructure> chosen;
  double epsilon = 0.1;
  Decision decision = Decision::Hold;
  std::string reason;

  double improvement() const;  // (current - best) / current, 0 without candidates
};

// Every (engine, layout) pair, duplicates removed, in layout-major order.
std::vector<StorageStructure> cartesian_candidates(std::span<const DataLayout> layouts,
                                                   std::span<const EngineKind> engines);

// The Cartesian product minus structures violating the engine's layout rule.
std::vector<StorageStructure> generate_candidates(std::span<const DataLayout> layouts,
                                                  std::span<const EngineKind> engines, const TableSchema& schema);

// Runtime state a candidate would see, derived from the state observed under
// the current structure: same disk throughput, same number of cached pages
// (capped by the candidate's size), LSM file counts only for LSM engines.
RuntimeState candidate_state(const RuntimeState& observed, const StorageStructure& current,
                             const StorageStructure& candidate, const TableSchema& schema, std::uint64_t table_rows,
                             std::uint64_t page_size = 4096);

// Total pages the table occupies under a layout.
std::uint64_t layout_pages(const DataLayout& layout, const TableSchema& schema, std::uint64_t rows,
                           std::uint64_t page_size = 4096);

struct EvaluateOptions {
  double epsilon = 0.1;
  std::uint64_t page_size = 4096;
  std::uint64_t lsm_file_pages = 64;
};

// Throws ModelMissing when the model lacks an engine any candidate needs.
Recommendation evaluate(const std::vector<StorageStructure>& candidates, const Workload& workload,
                        const TableSchema& schema, const CostModel* model, const RuntimeState& observed,
                        const StorageStructure& current, const EvaluateOptions& options = {});

// Apply iff (current - best) / current > epsilon.
Decision epsilon_rule(double current_cost, double best_cost, double epsilon);

nlohmann::json to_json(const Recommendation& rec, const TableSchema& schema);
std::string format_table(const Recommendation& rec, const TableSchema& schema);

}  // namespace ssel
