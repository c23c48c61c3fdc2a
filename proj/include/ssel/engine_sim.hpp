#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <list>
#include <unordered_map>
#include <vector>

#include "ssel/core.hpp"
#include "ssel/features.hpp"

namespace ssel {

// Cost constants of the simulated engines, in virtual microseconds.
struct SimConfig {
  std::uint64_t page_size = 4096;
  double hit_us = 1.0;
  double miss_us = 100.0;
  double buffer_row_us = 0.5;
  double flush_page_us = 10.0;
  // Per-group log append and commit charged once per insert op.
  double write_op_us = 10.0;
  double cpu_row_us = 0.05;
  double btree_level_us = 0.5;
  double lsm_probe_us = 4.0;
  // Merge-iterator overhead per row and per LSM file visited by a scan.
  double lsm_merge_cpu_factor = 0.25;
  std::uint64_t lsm_l1_trigger = 4;
  // Level-2 runs are cut into files of this many pages.
  std::uint64_t lsm_file_pages = 64;
  // Level 2 rewritten per compaction is bounded by this multiple of level 1.
  double lsm_size_ratio = 10.0;
  // Column files are read with large sequential requests.
  double columnar_scan_miss_factor = 0.25;
  std::uint64_t cache_capacity_pages = 1024;
  std::uint64_t buffer_capacity_rows = 1000;
  double window_us = 1e6;
  double disk_bandwidth_bytes_per_sec = 100e6;
  // Miss latency grows by this fraction at full disk utilization.
  double disk_contention = 0.2;
};

class PageCache {
 public:
  explicit PageCache(std::uint64_t capacity) : capacity_(capacity) {}

  // Returns true on a hit. Misses are inserted as most recently used.
  bool access(std::uint64_t page);
  void insert(std::uint64_t page) { access(page); }
  bool contains(std::uint64_t page) const { return index_.count(page) != 0; }
  void clear();
  std::uint64_t size() const { return index_.size(); }
  std::uint64_t capacity() const { return capacity_; }
  // Cached pages whose id carries this tag in its top 24 bits.
  std::uint64_t tagged(std::uint64_t tag) const {
    auto it = per_tag_.find(tag);
    return it == per_tag_.end() ? 0 : it->second;
  }

 private:
  std::uint64_t capacity_;
  std::unordered_map<std::uint64_t, std::uint64_t> per_tag_;
  std::list<std::uint64_t> order_;  // front = most recently used
  std::unordered_map<std::uint64_t, std::list<std::uint64_t>::iterator> index_;
};

struct GroupCost {
  std::size_t group = 0;
  double elapsed_us = 0.0;
  bool surge = false;
  std::uint64_t pages_read = 0;
  std::uint64_t pages_missed = 0;
  std::uint64_t pages_written = 0;
  double surge_us = 0.0;  // flush and compaction share of elapsed_us
  // LSM file counts of this group's tree when the op started.
  std::uint64_t l1_files_before = 0;
  std::uint64_t l2_files_before = 0;
  std::uint64_t group_pages_before = 0;
  std::uint64_t cached_pages_before = 0;
};

struct OpTrace {
  AccessOp op;  // result_rows and selectivity as actually executed
  double elapsed_us = 0.0;
  bool surge = false;
  bool key_not_found = false;
  RuntimeState state_before;
  std::vector<GroupCost> groups;  // only the groups the op touched
  std::uint64_t result_digest = 0;
};

// Logical table content independent of engine and layout.
struct Snapshot {
  TableSchema schema;
  std::vector<std::uint64_t> keys;   // ascending
  std::vector<std::uint64_t> cells;  // row-major, keys.size() x value_count

  bool operator==(const Snapshot&) const = default;
};

std::vector<std::uint8_t> encode_snapshot(const Snapshot& snapshot);
Snapshot decode_snapshot(std::span<const std::uint8_t> bytes);  // throws CorruptSnapshot / UnsupportedVersion
void write_snapshot_file(const Snapshot& snapshot, const std::filesystem::path& path);
Snapshot read_snapshot_file(const std::filesystem::path& path);

// A table partition stored under one storage structure, executing real
// operations over materialized rows while charging deterministic virtual time.
// Keys are dense: the table always holds keys [0, row_count()), and inserts
// append a fresh key block in the order the op prescribes.
class EnginePartition {
 public:
  EnginePartition(TableSchema schema, StorageStructure structure, SimConfig config = {},
                  std::uint64_t data_seed = 0);

  OpTrace exec(const AccessOp& op);

  // Loads `rows` rows as if restored from a sorted dump: no virtual time, cold cache.
  void bulk_load(std::uint64_t rows);

  Snapshot snapshot() const;
  static EnginePartition restore(const Snapshot& snapshot, StorageStructure structure, SimConfig config = {},
                                 std::uint64_t data_seed = 0);

  void clear_page_cache() { cache_.clear(); }
  void idle(double duration_us);

  RuntimeState runtime_state() const;

  const TableSchema& schema() const { return schema_; }
  const StorageStructure& structure() const { return structure_; }
  const SimConfig& config() const { return config_; }
  std::uint64_t data_seed() const { return data_seed_; }
  std::uint64_t row_count() const { return rows_; }
  double clock_us() const { return clock_us_; }
  std::size_t group_count() const { return groups_.size(); }
  std::uint64_t buffered_rows() const { return groups_.empty() ? 0 : groups_.front().buffered_rows; }
  std::uint64_t cell(std::uint64_t key, std::size_t value_index) const;

  // Pages a range scan of `rows` rows would touch in `group`.
  std::uint64_t scan_pages(std::size_t group, std::uint64_t rows) const;

 private:
  struct Group {
    ColumnSet columns;
    std::vector<std::size_t> value_indices;  // schema value indices, ascending
    std::uint64_t row_bytes = 0;
    std::vector<std::uint64_t> data;  // row-major, row_count x value_indices.size()
    std::uint64_t buffered_rows = 0;
    double buffered_random_rows = 0.0;  // sum of rows x key randomness in the buffer
    std::uint64_t l1_files = 0;
    std::uint64_t l1_rows = 0;
    double l1_random_rows = 0.0;
    std::uint64_t l2_files = 0;
    std::uint64_t l2_rows = 0;
  };

  struct IoEvent {
    double at_us;
    double read_bytes;
    double write_bytes;
  };

  std::uint64_t page_id(std::size_t group, std::uint64_t page_no) const {
    return (static_cast<std::uint64_t>(group) << 40) | page_no;
  }
  std::uint64_t group_pages(const Group& g, std::uint64_t rows) const;
  std::uint64_t total_pages() const;
  std::uint64_t generate_cell(std::uint64_t key, std::size_t value_index) const;
  std::uint64_t btree_depth() const;
  std::vector<std::size_t> touched_groups(const AccessOp& op) const;
  std::uint64_t l2_file_count(const Group& g) const;
  // Level-1 files plus one level-2 run; what a lookup or scan has to merge.
  static std::uint64_t sorted_runs(const Group& g) { return g.l1_files + (g.l2_files > 0 ? 1 : 0); }
  GroupCost start_cost(std::size_t group) const;

  void exec_point(const AccessOp& op, OpTrace& trace, double miss_us);
  void exec_scan(const AccessOp& op, OpTrace& trace, double miss_us);
  void exec_insert(const AccessOp& op, OpTrace& trace);
  double flush(std::size_t group_index, GroupCost& cost, std::uint64_t flush_rows, double randomness,
               std::uint64_t rows_after);

  void prune_window() const;

  TableSchema schema_;
  StorageStructure structure_;
  SimConfig config_;
  std::uint64_t data_seed_;
  std::vector<Group> groups_;
  std::uint64_t rows_ = 0;
  PageCache cache_;
  double clock_us_ = 0.0;
  mutable std::deque<IoEvent> io_events_;
  mutable double window_read_bytes_ = 0.0;
  mutable double window_write_bytes_ = 0.0;
  double pending_read_bytes_ = 0.0;
  double pending_write_bytes_ = 0.0;
};

// Executes every op `frequency` times and returns the traces in order.
std::vector<OpTrace> run_workload(EnginePartition& partition, const std::vector<AccessOp>& ops);

}  // namespace ssel
