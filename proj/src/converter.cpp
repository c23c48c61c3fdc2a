#include "ssel/converter.hpp"

#include <fstream>

#include "json.hpp"
#include "ssel/binary_io.hpp"

namespace ssel {

using nlohmann::json;

namespace {

constexpr int kManifestVersion = 1;

std::string data_file_name(std::uint64_t generation) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "gen-%06llu.snap", static_cast<unsigned long long>(generation));
  return buf;
}

std::optional<std::uint64_t> generation_of(const std::string& name) {
  if (!name.starts_with("gen-") || !name.ends_with(".snap")) return std::nullopt;
  try {
    return std::stoull(name.substr(4, name.size() - 9));
  } catch (...) {
    return std::nullopt;
  }
}

}  // namespace

ManifestStore::ManifestStore(std::filesystem::path dir, std::string partition_id)
    : dir_(std::move(dir)), partition_id_(std::move(partition_id)) {}

bool ManifestStore::exists() const { return std::filesystem::exists(manifest_path()); }

std::filesystem::path ManifestStore::data_path(std::uint64_t generation) const {
  return dir_ / data_file_name(generation);
}

void ManifestStore::write_manifest(const PartitionManifest& m) const {
  json groups = json::array();
  for (const auto& g : m.structure.layout.groups) groups.push_back(std::vector<std::string>(g.begin(), g.end()));
  const json j = {{"version", kManifestVersion},
                  {"partition", m.partition_id},
                  {"generation", m.generation},
                  {"engine", std::string(to_string(m.structure.engine))},
                  {"layout", groups},
                  {"data_file", m.data_file}};
  write_file_atomic(manifest_path(), j.dump(2) + "\n");
}

PartitionManifest ManifestStore::load() const {
  std::ifstream in(manifest_path());
  if (!in) throw Error(ErrorCode::IoError, "no manifest in " + dir_.string());
  try {
    const auto j = json::parse(in);
    if (j.at("version").get<int>() != kManifestVersion) {
      throw Error(ErrorCode::UnsupportedVersion, "manifest version " + j.at("version").dump());
    }
    PartitionManifest m;
    m.partition_id = j.at("partition").get<std::string>();
    m.generation = j.at("generation").get<std::uint64_t>();
    m.structure.engine = parse_engine(j.at("engine").get<std::string>());
    for (const auto& g : j.at("layout")) {
      const auto names = g.get<std::vector<std::string>>();
      m.structure.layout.groups.emplace_back(names.begin(), names.end());
    }
    m.data_file = j.at("data_file").get<std::string>();
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoError, "malformed manifest: " + std::string(e.what()));
  }
}

PartitionManifest ManifestStore::init(const EnginePartition& partition) {
  if (exists()) throw Error(ErrorCode::IoError, "partition store already initialized: " + dir_.string());
  std::filesystem::create_directories(dir_);
  PartitionManifest m;
  m.partition_id = partition_id_;
  m.structure = partition.structure();
  m.generation = next_generation();
  m.data_file = data_file_name(m.generation);
  write_snapshot_file(partition.snapshot(), dir_ / m.data_file);
  write_manifest(m);
  return m;
}

EnginePartition ManifestStore::open(const SimConfig& config, std::uint64_t data_seed) const {
  const auto m = load();
  const auto snap = read_snapshot_file(dir_ / m.data_file);
  return EnginePartition::restore(snap, m.structure, config, data_seed);
}

std::uint64_t ManifestStore::next_generation() const {
  std::uint64_t highest = 0;
  if (exists()) highest = load().generation;
  if (std::filesystem::is_directory(dir_)) {
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
      if (auto g = generation_of(entry.path().filename().string())) highest = std::max(highest, *g);
    }
  }
  return highest + 1;
}

EnginePartition convert(const EnginePartition& partition, const StorageStructure& target,
                        const ConvertOptions& options) {
  try {
    validate_structure(target, partition.schema());
  } catch (const Error& e) {
    throw Error(ErrorCode::TargetInvalid, e.what());
  }
  const auto before = partition.snapshot();
  auto built = EnginePartition::restore(before, target, partition.config(), partition.data_seed());
  if (options.fail_point == FailPoint::AfterBuild) throw Error(ErrorCode::IoError, "injected failure after build");

  auto after = built.snapshot();
  if (options.fail_point == FailPoint::CorruptBuild && !after.cells.empty()) after.cells.front() ^= 1;
  if (!(after == before)) {
    throw Error(ErrorCode::ConversionVerifyFailed, "rebuilt partition differs from the source content");
  }

  if (options.store) {
    auto& store = *options.store;
    const auto previous = store.exists() ? std::optional(store.load()) : std::nullopt;
    PartitionManifest next;
    next.partition_id = store.partition_id();
    next.structure = built.structure();
    next.generation = store.next_generation();
    next.data_file = data_file_name(next.generation);
    write_snapshot_file(after, store.dir() / next.data_file);
    if (options.fail_point == FailPoint::AfterDataWrite) {
      throw Error(ErrorCode::IoError, "injected failure before manifest swap");
    }
    store.write_manifest(next);  // the single atomic step
    if (previous) {
      std::error_code ec;
      std::filesystem::remove(store.dir() / previous->data_file, ec);
    }
  }
  return built;
}

}  // namespace ssel
