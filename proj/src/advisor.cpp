#include "ssel/advisor.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace ssel {

double Recommendation::improvement() const {
  if (candidates.empty() || !(current_cost_us > 0.0)) return 0.0;
  return (current_cost_us - candidates.front().predicted_cost_us) / current_cost_us;
}

std::vector<StorageStructure> cartesian_candidates(std::span<const DataLayout> layouts,
                                                   std::span<const EngineKind> engines) {
  std::vector<StorageStructure> out;
  for (const auto& layout : layouts) {
    for (auto engine : engines) {
      StorageStructure s{engine, layout};
      if (std::none_of(out.begin(), out.end(), [&](const StorageStructure& o) { return same_structure(o, s); })) {
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

std::vector<StorageStructure> generate_candidates(std::span<const DataLayout> layouts,
                                                  std::span<const EngineKind> engines, const TableSchema& schema) {
  auto all = cartesian_candidates(layouts, engines);
  std::erase_if(all, [&](const StorageStructure& s) { return !is_valid_structure(s, schema); });
  return all;
}

std::uint64_t layout_pages(const DataLayout& layout, const TableSchema& schema, std::uint64_t rows,
                           std::uint64_t page_size) {
  std::uint64_t pages = 0;
  for (const auto& g : layout.groups) pages += (rows * row_bytes_for_group(schema, g) + page_size - 1) / page_size;
  return std::max<std::uint64_t>(pages, 1);
}

RuntimeState candidate_state(const RuntimeState& observed, const StorageStructure& current,
                             const StorageStructure& candidate, const TableSchema& schema, std::uint64_t table_rows,
                             std::uint64_t page_size) {
  RuntimeState s = observed;
  s.total_pages = layout_pages(candidate.layout, schema, table_rows, page_size);
  s.cached_pages = std::min(observed.cached_pages, s.total_pages);
  if (candidate.engine != EngineKind::LsmRow) {
    s.file_count = s.l1_file_count = s.l2_file_count = 0;
  } else if (current.engine != EngineKind::LsmRow) {
    // Mid-cycle of a tree that compacts after its fifth level-1 file.
    s.l1_file_count = 2;
    s.l2_file_count = 1;
    s.file_count = 3;
  }
  return s;
}

Decision epsilon_rule(double current_cost, double best_cost, double epsilon) {
  if (!(current_cost > 0.0)) return Decision::Hold;
  return (current_cost - best_cost) / current_cost > epsilon ? Decision::Apply : Decision::Hold;
}

Recommendation evaluate(const std::vector<StorageStructure>& candidates, const Workload& workload,
                        const TableSchema& schema, const CostModel* model, const RuntimeState& observed,
                        const StorageStructure& current, const EvaluateOptions& options) {
  if (!model) throw Error(ErrorCode::ModelMissing, "no cost model loaded");
  if (!(options.epsilon >= 0.0 && options.epsilon <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "epsilon must lie in [0,1]");
  }
  validate_structure(current, schema);
  Recommendation rec;
  rec.current = current;
  rec.epsilon = options.epsilon;

  auto cost_of = [&](const StorageStructure& s) {
    const auto state = candidate_state(observed, current, s, schema, workload.initial_table_rows, options.page_size);
    return predict_workload(*model, s, schema, workload, state, {options.page_size, options.lsm_file_pages});
  };
  rec.current_cost_us = cost_of(current);
  for (const auto& s : candidates) {
    validate_structure(s, schema);
    rec.candidates.push_back({s, same_structure(s, current) ? rec.current_cost_us : cost_of(s)});
  }
  std::stable_sort(rec.candidates.begin(), rec.candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.predicted_cost_us < b.predicted_cost_us; });

  if (rec.candidates.empty()) {
    rec.reason = "no candidates";
    return rec;
  }
  const auto& best = rec.candidates.front();
  rec.decision = epsilon_rule(rec.current_cost_us, best.predicted_cost_us, options.epsilon);
  char buf[160];
  if (rec.decision == Decision::Apply) {
    rec.chosen = best.structure;
    std::snprintf(buf, sizeof buf, "predicted improvement %.2f%% exceeds epsilon %.2f%%", 100.0 * rec.improvement(),
                  100.0 * options.epsilon);
  } else if (same_structure(best.structure, current)) {
    std::snprintf(buf, sizeof buf, "current structure is already the best candidate");
  } else {
    std::snprintf(buf, sizeof buf, "predicted improvement %.2f%% does not exceed epsilon %.2f%%",
                  100.0 * rec.improvement(), 100.0 * options.epsilon);
  }
  rec.reason = buf;
  return rec;
}

nlohmann::json to_json(const Recommendation& rec, const TableSchema& schema) {
  nlohmann::json cands = nlohmann::json::array();
  for (std::size_t i = 0; i < rec.candidates.size(); ++i) {
    const auto& c = rec.candidates[i];
    cands.push_back({{"rank", i + 1},
                     {"engine", std::string(to_string(c.structure.engine))},
                     {"layout", to_string(c.structure.layout, schema)},
                     {"predicted_cost_us", c.predicted_cost_us}});
  }
  nlohmann::json j = {{"version", 1},
                      {"table", schema.name()},
                      {"current",
                       {{"engine", std::string(to_string(rec.current.engine))},
                        {"layout", to_string(rec.current.layout, schema)},
                        {"predicted_cost_us", rec.current_cost_us}}},
                      {"epsilon", rec.epsilon},
                      {"improvement", rec.improvement()},
                      {"decision", rec.decision == Decision::Apply ? "apply" : "hold"},
                      {"reason", rec.reason},
                      {"candidates", cands}};
  if (rec.chosen) {
    j["chosen"] = {{"engine", std::string(to_string(rec.chosen->engine))},
                   {"layout", to_string(rec.chosen->layout, schema)}};
  } else {
    j["chosen"] = nullptr;
  }
  return j;
}

std::string format_table(const Recommendation& rec, const TableSchema& schema) {
  std::ostringstream out;
  char line[512];
  std::snprintf(line, sizeof line, "current  %-9s %-40s %14.1f us\n", std::string(to_string(rec.current.engine)).c_str(),
                to_string(rec.current.layout, schema).c_str(), rec.current_cost_us);
  out << line;
  out << "rank engine    layout                                   predicted_us\n";
  for (std::size_t i = 0; i < rec.candidates.size(); ++i) {
    const auto& c = rec.candidates[i];
    std::snprintf(line, sizeof line, "%4zu %-9s %-40s %14.1f\n", i + 1, std::string(to_string(c.structure.engine)).c_str(),
                  to_string(c.structure.layout, schema).c_str(), c.predicted_cost_us);
    out << line;
  }
  out << "decision: " << (rec.decision == Decision::Apply ? "apply" : "hold") << " (" << rec.reason << ")\n";
  return out.str();
}

}  // namespace ssel
