#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "ssel/engine_sim.hpp"

namespace ssel {

struct PartitionManifest {
  std::string partition_id;
  StorageStructure structure;
  std::string data_file;  // relative to the store directory
  std::uint64_t generation = 0;
};

// One partition's persisted state: "manifest.json" naming the active
// generation plus one snapshot file per generation. The manifest is replaced
// atomically, so readers always see exactly one complete generation.
class ManifestStore {
 public:
  ManifestStore(std::filesystem::path dir, std::string partition_id);

  bool exists() const;
  // Persists the partition as generation 1. Throws IoError if already initialized.
  PartitionManifest init(const EnginePartition& partition);

  PartitionManifest load() const;  // throws IoError / UnsupportedVersion
  EnginePartition open(const SimConfig& config = {}, std::uint64_t data_seed = 0) const;

  // Highest generation seen in the manifest or on disk, plus one; never reuses a number.
  std::uint64_t next_generation() const;

  std::filesystem::path data_path(std::uint64_t generation) const;
  void write_manifest(const PartitionManifest& manifest) const;

  const std::filesystem::path& dir() const { return dir_; }
  const std::string& partition_id() const { return partition_id_; }

 private:
  std::filesystem::path manifest_path() const { return dir_ / "manifest.json"; }

  std::filesystem::path dir_;
  std::string partition_id_;
};

// Test hook: where convert() pretends to crash.
enum class FailPoint { None, AfterBuild, CorruptBuild, AfterDataWrite };

struct ConvertOptions {
  ManifestStore* store = nullptr;  // persist and swap the manifest when set
  FailPoint fail_point = FailPoint::None;
};

// Snapshot, rebuild under `target`, verify the full content, then swap. On any
// failure the source partition and the active manifest generation are untouched.
// Throws TargetInvalid or ConversionVerifyFailed.
EnginePartition convert(const EnginePartition& partition, const StorageStructure& target,
                        const ConvertOptions& options = {});

}  // namespace ssel
