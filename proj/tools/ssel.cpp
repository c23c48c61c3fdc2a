#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "ssel/advisor.hpp"
#include "ssel/benchgen.hpp"
#include "ssel/binary_io.hpp"
#include "ssel/converter.hpp"
#include "ssel/learner.hpp"
#include "ssel/perf_io.hpp"
#include "ssel/scenario.hpp"

namespace fs = std::filesystem;
using namespace ssel;

namespace {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConversionVerifyFailed:
    case ErrorCode::CorruptSnapshot:
      return 2;
    default:
      return 1;
  }
}

int cmd_bench(const fs::path& config_path, const fs::path& out, std::optional<std::uint64_t> seed) {
  auto config = read_bench_config(config_path);
  if (seed) config.seed = *seed;
  const auto records = run_benchmark(config);
  write_perf_dir(records, out);
  std::printf("wrote %zu records to %s\n", records.size(), out.string().c_str());
  return 0;
}

int cmd_train(const fs::path& data, const fs::path& model_path, const LearnerOptions& options, bool force) {
  const auto records = read_perf_dir(data);
  if (!force && fs::exists(model_path)) {
    const auto previous = load_model(model_path);
    auto next = retrain_if_grown(previous, records, options);
    if (!next) {
      std::printf("model version %u is current (%zu records, trained on %llu); not retrained\n",
                  previous.model_version, records.size(),
                  static_cast<unsigned long long>(previous.trained_on_records));
      return 0;
    }
    save_model(*next, model_path);
    std::printf("retrained on %zu records; model version %u\n", records.size(), next->model_version);
    return 0;
  }
  const auto model = train(records, options);
  save_model(model, model_path);
  std::printf("trained on %zu records; model version %u\n", records.size(), model.model_version);
  return 0;
}

StorageStructure structure_from_flags(const ScenarioSpec& spec, const std::string& engine, const std::string& layout) {
  StorageStructure s = spec.current;
  if (!engine.empty()) s.engine = parse_engine(engine);
  if (!layout.empty()) s.layout = parse_layout(layout, spec.schema);
  if (!engine.empty() && layout.empty() && s.engine == EngineKind::Columnar) s.layout = DataLayout::dsm(spec.schema);
  validate_structure(s, spec.schema);
  return s;
}

int cmd_recommend(const fs::path& scenario_path, const fs::path& model_path, std::optional<double> epsilon,
                  bool apply, const std::string& report, const std::string& state_dir) {
  const auto spec = read_scenario(scenario_path);
  if (!fs::exists(model_path)) throw Error(ErrorCode::ModelMissing, "no model at " + model_path.string());
  const auto model = load_model(model_path);
  const auto run = advise(spec, model, epsilon.value_or(spec.epsilon));
  const auto& rec = run.recommendation;
  std::cout << format_table(rec, spec.schema);
  auto doc = to_json(rec, spec.schema);
  doc["scenario"] = spec.name;
  doc["applied"] = false;

  if (apply && rec.decision == Decision::Apply) {
    if (state_dir.empty()) throw Error(ErrorCode::InvalidConfig, "--apply needs --state-dir");
    ManifestStore store(state_dir, spec.schema.name());
    auto current = store.exists() ? store.open(spec.sim) : build_partition(spec, spec.current);
    if (!store.exists()) store.init(current);
    convert(current, *rec.chosen, {&store, FailPoint::None});
    const auto m = store.load();
    doc["applied"] = true;
    doc["generation"] = m.generation;
    std::printf("applied %s (generation %llu)\n", to_string(*rec.chosen, spec.schema).c_str(),
                static_cast<unsigned long long>(m.generation));
  }
  if (!report.empty()) write_file_atomic(report, doc.dump(2) + "\n");
  return 0;
}

int cmd_simulate(const fs::path& scenario_path, const std::string& engine, const std::string& layout,
                 bool json_out) {
  const auto spec = read_scenario(scenario_path);
  const auto structure = structure_from_flags(spec, engine, layout);
  const auto r = simulate(spec, structure);
  if (json_out) {
    nlohmann::json j = {{"scenario", spec.name},
                        {"engine", std::string(to_string(structure.engine))},
                        {"layout", to_string(structure.layout, spec.schema)},
                        {"ops", r.ops},
                        {"total_us", r.total_us},
                        {"read_us", r.read_us},
                        {"write_us", r.write_us}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::printf("%s  %s  ops=%llu total_us=%.1f read_us=%.1f write_us=%.1f\n", spec.name.c_str(),
                to_string(structure, spec.schema).c_str(), static_cast<unsigned long long>(r.ops), r.total_us,
                r.read_us, r.write_us);
  }
  return 0;
}

int cmd_convert(const fs::path& state_dir, const std::string& scenario_path, const std::string& engine,
                const std::string& layout) {
  std::optional<ScenarioSpec> spec;
  if (!scenario_path.empty()) spec = read_scenario(scenario_path);
  ManifestStore store(state_dir, spec ? spec->schema.name() : "partition");
  if (!store.exists()) {
    if (!spec) throw Error(ErrorCode::InvalidConfig, "store is empty; pass --scenario to initialize it");
    store.init(build_partition(*spec, spec->current));
  }
  const auto partition = store.open(spec ? spec->sim : SimConfig{});
  StorageStructure target = partition.structure();
  if (!engine.empty()) target.engine = parse_engine(engine);
  if (!layout.empty()) target.layout = parse_layout(layout, partition.schema());
  if (!engine.empty() && layout.empty() && target.engine == EngineKind::Columnar) {
    target.layout = DataLayout::dsm(partition.schema());
  }
  convert(partition, target, {&store, FailPoint::None});
  const auto m = store.load();
  std::printf("generation %llu active: %s (%llu rows)\n", static_cast<unsigned long long>(m.generation),
              to_string(target, partition.schema()).c_str(),
              static_cast<unsigned long long>(partition.row_count()));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Storage-structure advisor: benchmark, learn, recommend and convert"};
  app.require_subcommand(1);

  std::string config_path, out_dir, data_dir, model_path, scenario_path, report, state_dir, engine, layout;
  std::optional<std::uint64_t> seed;
  std::optional<double> epsilon;
  bool apply = false, dry_run = false, force = false, json_out = false;
  std::string composition = "printed";
  std::size_t min_records = 50;

  auto* bench = app.add_subcommand("bench", "Generate performance data on the engine simulators");
  bench->add_option("--config", config_path, "Benchmark configuration (JSON)")->required()->check(CLI::ExistingFile);
  bench->add_option("--out", out_dir, "Output directory for perf_*.jsonl")->required();
  bench->add_option("--seed", seed, "Override the configuration seed");

  auto* train_cmd = app.add_subcommand("train", "Fit the cost model on performance data");
  train_cmd->add_option("--data", data_dir, "Directory of perf_*.jsonl files")->required();
  train_cmd->add_option("--model", model_path, "Model file to write")->required();
  train_cmd->add_option("--min-records", min_records, "Minimum records per (engine, op class)");
  train_cmd->add_option("--composition", composition, "Write composition: printed or complementary")
      ->check(CLI::IsMember({"printed", "complementary"}));
  train_cmd->add_flag("--force", force, "Retrain even if the data did not grow by 10%");

  auto* rec_cmd = app.add_subcommand("recommend", "Recommend a storage structure for a scenario");
  rec_cmd->add_option("--scenario", scenario_path, "Scenario file (JSON)")->required()->check(CLI::ExistingFile);
  rec_cmd->add_option("--model", model_path, "Trained model file")->required();
  rec_cmd->add_option("--epsilon", epsilon, "Minimum relative improvement to apply")->check(CLI::Range(0.0, 1.0));
  auto* apply_flag = rec_cmd->add_flag("--apply", apply, "Convert the partition when the decision is apply");
  rec_cmd->add_flag("--dry-run", dry_run, "Report only (default)")->excludes(apply_flag);
  rec_cmd->add_option("--report", report, "Write the recommendation report (JSON) here");
  rec_cmd->add_option("--state-dir", state_dir, "Partition store used by --apply");

  auto* sim_cmd = app.add_subcommand("simulate", "Measure a scenario under one storage structure");
  sim_cmd->add_option("--scenario", scenario_path, "Scenario file (JSON)")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--engine", engine, "bplus, lsm or columnar (default: scenario current)");
  sim_cmd->add_option("--layout", layout, "NSM, DSM or e.g. (V1,V2)(V3) (default: scenario current)");
  sim_cmd->add_flag("--json", json_out, "Print JSON");

  auto* conv_cmd = app.add_subcommand("convert", "Convert a persisted partition to another storage structure");
  conv_cmd->add_option("--state-dir", state_dir, "Partition store directory")->required();
  conv_cmd->add_option("--scenario", scenario_path, "Scenario used to initialize an empty store");
  conv_cmd->add_option("--engine", engine, "Target engine");
  conv_cmd->add_option("--layout", layout, "Target layout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (bench->parsed()) return cmd_bench(config_path, out_dir, seed);
    if (train_cmd->parsed()) {
      LearnerOptions options;
      options.min_records = min_records;
      options.composition = composition == "printed" ? WriteComposition::AsPrinted : WriteComposition::Complementary;
      return cmd_train(data_dir, model_path, options, force);
    }
    if (rec_cmd->parsed()) return cmd_recommend(scenario_path, model_path, epsilon, apply && !dry_run, report, state_dir);
    if (sim_cmd->parsed()) return cmd_simulate(scenario_path, engine, layout, json_out);
    if (conv_cmd->parsed()) return cmd_convert(state_dir, scenario_path, engine, layout);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 2;
  }
  return 1;
}
