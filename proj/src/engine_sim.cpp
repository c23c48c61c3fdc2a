#include "ssel/engine_sim.hpp"

#include <algorithm>
#include <cmath>

#include "ssel/binary_io.hpp"
#include "ssel/rng.hpp"

namespace ssel {

bool PageCache::access(std::uint64_t page) {
  auto it = index_.find(page);
  if (it != index_.end()) {
    order_.splice(order_.begin(), order_, it->second);
    return true;
  }
  if (capacity_ == 0) return false;
  if (index_.size() >= capacity_) {
    if (--per_tag_[order_.back() >> 40] == 0) per_tag_.erase(order_.back() >> 40);
    index_.erase(order_.back());
    order_.pop_back();
  }
  ++per_tag_[page >> 40];
  order_.push_front(page);
  index_.emplace(page, order_.begin());
  return false;
}

void PageCache::clear() {
  per_tag_.clear();
  order_.clear();
  index_.clear();
}

namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

std::uint64_t digest_step(std::uint64_t h, std::uint64_t key, std::uint64_t column, std::uint64_t value) {
  return Rng::mix(h ^ Rng::mix(key * 0x9e3779b97f4a7c15ULL + column) ^ (value * 0xc2b2ae3d27d4eb4fULL));
}

}  // namespace

EnginePartition::EnginePartition(TableSchema schema, StorageStructure structure, SimConfig config,
                                 std::uint64_t data_seed)
    : schema_(std::move(schema)),
      structure_(std::move(structure)),
      config_(config),
      data_seed_(data_seed),
      cache_(config.cache_capacity_pages) {
  validate_structure(structure_, schema_);
  structure_.layout = structure_.layout.canonical(schema_);
  for (const auto& columns : structure_.layout.groups) {
    Group g;
    g.columns = columns;
    for (const auto& column : columns) g.value_indices.push_back(schema_.require_value_index(column));
    std::sort(g.value_indices.begin(), g.value_indices.end());
    g.row_bytes = row_bytes_for_group(schema_, columns);
    groups_.push_back(std::move(g));
  }
}

std::uint64_t EnginePartition::generate_cell(std::uint64_t key, std::size_t value_index) const {
  return Rng::mix(data_seed_ ^ Rng::mix(key * 0x100000001b3ULL + value_index));
}

std::uint64_t EnginePartition::group_pages(const Group& g, std::uint64_t rows) const {
  return ceil_div(rows * g.row_bytes, config_.page_size);
}

std::uint64_t EnginePartition::scan_pages(std::size_t group, std::uint64_t rows) const {
  return group_pages(groups_.at(group), rows);
}

std::uint64_t EnginePartition::total_pages() const {
  std::uint64_t total = 0;
  for (const auto& g : groups_) total += group_pages(g, rows_);
  return std::max<std::uint64_t>(total, 1);
}

std::uint64_t EnginePartition::btree_depth() const {
  return static_cast<std::uint64_t>(std::ceil(std::log2(static_cast<double>(rows_) + 1.0)));
}

std::uint64_t EnginePartition::cell(std::uint64_t key, std::size_t value_index) const {
  for (const auto& g : groups_) {
    auto it = std::find(g.value_indices.begin(), g.value_indices.end(), value_index);
    if (it != g.value_indices.end()) {
      return g.data[key * g.value_indices.size() + static_cast<std::size_t>(it - g.value_indices.begin())];
    }
  }
  throw Error(ErrorCode::UnknownColumn, "value index out of range");
}

void EnginePartition::prune_window() const {
  const double horizon = clock_us_ - config_.window_us;
  while (!io_events_.empty() && io_events_.front().at_us <= horizon) {
    window_read_bytes_ -= io_events_.front().read_bytes;
    window_write_bytes_ -= io_events_.front().write_bytes;
    io_events_.pop_front();
  }
  if (io_events_.empty()) {
    window_read_bytes_ = 0.0;
    window_write_bytes_ = 0.0;
  }
}

RuntimeState EnginePartition::runtime_state() const {
  prune_window();
  RuntimeState state;
  const double seconds = config_.window_us / 1e6;
  state.disk_read_tput = std::max(0.0, window_read_bytes_) / seconds;
  state.disk_write_tput = std::max(0.0, window_write_bytes_) / seconds;
  state.total_pages = total_pages();
  state.cached_pages = std::min(cache_.size(), state.total_pages);
  if (structure_.engine == EngineKind::LsmRow && !groups_.empty()) {
    state.l1_file_count = groups_.front().l1_files;
    state.l2_file_count = groups_.front().l2_files;
    state.file_count = state.l1_file_count + state.l2_file_count;
  }
  return state;
}

void EnginePartition::idle(double duration_us) {
  if (duration_us <= 0.0) return;
  clock_us_ += duration_us;
}

std::vector<std::size_t> EnginePartition::touched_groups(const AccessOp& op) const {
  std::vector<std::size_t> touched;
  if (op.type == OpType::Insert || op.columns.empty()) {
    for (std::size_t i = 0; i < groups_.size(); ++i) touched.push_back(i);
    return touched;
  }
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    for (const auto& column : op.columns) {
      if (groups_[i].columns.count(column)) {
        touched.push_back(i);
        break;
      }
    }
  }
  return touched;
}

std::uint64_t EnginePartition::l2_file_count(const Group& g) const {
  if (g.l2_rows == 0) return 0;
  const auto pages = group_pages(g, g.l2_rows);
  const auto per_file = std::max<std::uint64_t>(config_.lsm_file_pages, 1);
  return (pages + per_file - 1) / per_file;
}

GroupCost EnginePartition::start_cost(std::size_t gi) const {
  GroupCost cost;
  cost.group = gi;
  cost.group_pages_before = std::max<std::uint64_t>(group_pages(groups_[gi], rows_), 1);
  cost.cached_pages_before = std::min(cache_.tagged(gi), cost.group_pages_before);
  if (structure_.engine == EngineKind::LsmRow) {
    cost.l1_files_before = groups_[gi].l1_files;
    cost.l2_files_before = groups_[gi].l2_files;
  }
  return cost;
}

void EnginePartition::bulk_load(std::uint64_t rows) {
  for (auto& g : groups_) {
    const std::size_t width = g.value_indices.size();
    g.data.resize((rows_ + rows) * width);
    for (std::uint64_t key = rows_; key < rows_ + rows; ++key) {
      for (std::size_t c = 0; c < width; ++c) g.data[key * width + c] = generate_cell(key, g.value_indices[c]);
    }
    if (structure_.engine == EngineKind::LsmRow && rows > 0) {
      g.l2_rows += rows;
      g.l2_files = l2_file_count(g);
    }
  }
  rows_ += rows;
}

OpTrace EnginePartition::exec(const AccessOp& op) {
  try {
    validate_op(op, schema_);
  } catch (const Error& e) {
    throw Error(ErrorCode::SchemaMismatch, e.what());
  }

  OpTrace trace;
  trace.op = op;
  trace.state_before = runtime_state();
  const double utilization = std::min(
      1.0, (trace.state_before.disk_read_tput + trace.state_before.disk_write_tput) /
               config_.disk_bandwidth_bytes_per_sec);
  const double miss_us = config_.miss_us * (1.0 + config_.disk_contention * utilization);

  pending_read_bytes_ = 0.0;
  pending_write_bytes_ = 0.0;
  switch (op.type) {
    case OpType::PointLookup: exec_point(op, trace, miss_us); break;
    case OpType::RangeScan: exec_scan(op, trace, miss_us); break;
    case OpType::Insert: exec_insert(op, trace); break;
  }

  for (const auto& g : trace.groups) {
    trace.elapsed_us += g.elapsed_us;
    trace.surge = trace.surge || g.surge;
  }
  clock_us_ += trace.elapsed_us;
  if (pending_read_bytes_ > 0.0 || pending_write_bytes_ > 0.0) {
    io_events_.push_back({clock_us_, pending_read_bytes_, pending_write_bytes_});
    window_read_bytes_ += pending_read_bytes_;
    window_write_bytes_ += pending_write_bytes_;
  }
  return trace;
}

void EnginePartition::exec_point(const AccessOp& op, OpTrace& trace, double miss_us) {
  const auto key = static_cast<std::uint64_t>(std::floor(op.position * static_cast<double>(rows_)));
  const bool found = rows_ > 0 && op.position < 1.0 && key < rows_;
  trace.key_not_found = !found;
  trace.op.result_rows = found ? 1 : 0;
  trace.op.selectivity = rows_ == 0 ? 0.0 : (found ? 1.0 / static_cast<double>(rows_) : 0.0);

  const auto depth = static_cast<double>(btree_depth());
  for (auto gi : touched_groups(op)) {
    auto& g = groups_[gi];
    GroupCost cost = start_cost(gi);
    switch (structure_.engine) {
      case EngineKind::BPlusRow:
      case EngineKind::Columnar: cost.elapsed_us += config_.btree_level_us * depth; break;
      case EngineKind::LsmRow:
        cost.elapsed_us += config_.lsm_probe_us * static_cast<double>(sorted_runs(g));
        break;
    }
    if (found) {
      if (key + g.buffered_rows >= rows_) {
        cost.elapsed_us += config_.hit_us;  // still in the write buffer
      } else {
        ++cost.pages_read;
        if (cache_.access(page_id(gi, key * g.row_bytes / config_.page_size))) {
          cost.elapsed_us += config_.hit_us;
        } else {
          ++cost.pages_missed;
          cost.elapsed_us += miss_us;
          pending_read_bytes_ += static_cast<double>(config_.page_size);
        }
      }
      const std::size_t width = g.value_indices.size();
      for (std::size_t c = 0; c < width; ++c) {
        const auto column = g.value_indices[c];
        if (op.columns.empty() || op.columns.count(schema_.value_field(column).name)) {
          trace.result_digest += digest_step(0, key, column, g.data[key * width + c]);
        }
      }
    }
    cost.elapsed_us += config_.cpu_row_us;
    trace.groups.push_back(cost);
  }
}

void EnginePartition::exec_scan(const AccessOp& op, OpTrace& trace, double miss_us) {
  std::uint64_t start = static_cast<std::uint64_t>(std::floor(std::min(op.position, 1.0) * static_cast<double>(rows_)));
  const std::uint64_t want = op.result_rows;
  if (want >= rows_) {
    start = 0;
  } else if (start + want > rows_) {
    start = rows_ - want;
  }
  const std::uint64_t count = std::min(want, rows_ - std::min(start, rows_));
  trace.op.result_rows = count;
  trace.op.selectivity = rows_ == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(rows_);

  const auto depth = static_cast<double>(btree_depth());
  for (auto gi : touched_groups(op)) {
    auto& g = groups_[gi];
    GroupCost cost = start_cost(gi);
    double page_miss_us = miss_us;
    double cpu_factor = 1.0;
    switch (structure_.engine) {
      case EngineKind::BPlusRow: cost.elapsed_us += config_.btree_level_us * depth; break;
      case EngineKind::Columnar:
        cost.elapsed_us += config_.btree_level_us * depth;
        page_miss_us *= config_.columnar_scan_miss_factor;
        break;
      case EngineKind::LsmRow: {
        const auto runs = static_cast<double>(sorted_runs(g));
        cost.elapsed_us += config_.lsm_probe_us * runs;
        cpu_factor += config_.lsm_merge_cpu_factor * runs;
        break;
      }
    }
    if (count > 0) {
      const std::uint64_t first = start * g.row_bytes / config_.page_size;
      const std::uint64_t pages = group_pages(g, count);
      for (std::uint64_t p = first; p < first + pages; ++p) {
        ++cost.pages_read;
        if (cache_.access(page_id(gi, p))) {
          cost.elapsed_us += config_.hit_us;
        } else {
          ++cost.pages_missed;
          cost.elapsed_us += page_miss_us;
          pending_read_bytes_ += static_cast<double>(config_.page_size);
        }
      }
      const std::size_t width = g.value_indices.size();
      for (std::size_t c = 0; c < width; ++c) {
        const auto column = g.value_indices[c];
        if (!op.columns.empty() && !op.columns.count(schema_.value_field(column).name)) continue;
        std::uint64_t h = 0;
        for (std::uint64_t key = start; key < start + count; ++key) {
          h = digest_step(h, key, column, g.data[key * width + c]);
        }
        trace.result_digest += h;
      }
    }
    cost.elapsed_us += config_.cpu_row_us * static_cast<double>(std::max<std::uint64_t>(count, 1)) * cpu_factor;
    trace.groups.push_back(cost);
  }
}

double EnginePartition::flush(std::size_t gi, GroupCost& cost, std::uint64_t flush_rows, double randomness,
                              std::uint64_t rows_after) {
  auto& g = groups_[gi];
  const std::uint64_t seq_pages = group_pages(g, flush_rows);
  double pages_written = static_cast<double>(seq_pages);
  double pages_read = 0.0;
  switch (structure_.engine) {
    case EngineKind::BPlusRow: {
      // Random keys land on distinct leaves instead of a contiguous run.
      const double table_pages = static_cast<double>(group_pages(g, rows_after));
      const double scattered = std::min(static_cast<double>(flush_rows), table_pages);
      pages_written += randomness * std::max(0.0, scattered - static_cast<double>(seq_pages));
      break;
    }
    case EngineKind::Columnar: break;
    case EngineKind::LsmRow: {
      ++g.l1_files;
      g.l1_rows += flush_rows;
      g.l1_random_rows += randomness * static_cast<double>(flush_rows);
      if (g.l1_files > config_.lsm_l1_trigger) {
        // Merge level 1 into level 2. Random key order overlaps level-2 files,
        // at most size_ratio times the level-1 input.
        const double l1_pages = static_cast<double>(group_pages(g, g.l1_rows));
        const double l1_randomness = g.l1_random_rows / static_cast<double>(g.l1_rows);
        const double l2_pages = static_cast<double>(group_pages(g, g.l2_rows));
        const double merged = l1_pages + l1_randomness * std::min(l2_pages, config_.lsm_size_ratio * l1_pages);
        pages_read += merged;
        pages_written += merged;
        g.l2_rows += g.l1_rows;
        g.l2_files = l2_file_count(g);
        g.l1_files = 0;
        g.l1_rows = 0;
        g.l1_random_rows = 0.0;
      }
      break;
    }
  }
  // Freshly written tail pages stay in the page cache.
  const std::uint64_t last_page = group_pages(g, rows_after);
  for (std::uint64_t p = last_page > seq_pages ? last_page - seq_pages : 0; p < last_page; ++p) {
    cache_.insert(page_id(gi, p));
  }
  const double us = config_.flush_page_us * (pages_written + pages_read);
  cost.surge = true;
  cost.pages_written += static_cast<std::uint64_t>(std::llround(pages_written));
  pending_write_bytes_ += pages_written * static_cast<double>(config_.page_size);
  pending_read_bytes_ += pages_read * static_cast<double>(config_.page_size);
  return us;
}

void EnginePartition::exec_insert(const AccessOp& op, OpTrace& trace) {
  const std::uint64_t n = op.result_rows;
  const double randomness = op.key_randomness.value_or(0.0);
  const auto perm = insert_permutation(n, op.order, op.order_seed);
  const std::uint64_t base = rows_;
  const std::uint64_t rows_after = rows_ + n;

  for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
    auto& g = groups_[gi];
    const std::size_t width = g.value_indices.size();
    g.data.resize(rows_after * width);
    for (auto offset : perm) {
      const std::uint64_t key = base + offset;
      for (std::size_t c = 0; c < width; ++c) {
        const auto value = generate_cell(key, g.value_indices[c]);
        g.data[key * width + c] = value;
        trace.result_digest += digest_step(0, key, g.value_indices[c], value);
      }
    }

    GroupCost cost = start_cost(gi);
    cost.elapsed_us = config_.write_op_us + static_cast<double>(n) * (config_.buffer_row_us + config_.cpu_row_us);
    const std::uint64_t total = g.buffered_rows + n;
    const double random_rows = g.buffered_random_rows + randomness * static_cast<double>(n);
    const double mean_randomness = total == 0 ? 0.0 : random_rows / static_cast<double>(total);
    const std::uint64_t flushes = total / config_.buffer_capacity_rows;
    for (std::uint64_t f = 0; f < flushes; ++f) {
      const double us = flush(gi, cost, config_.buffer_capacity_rows, mean_randomness, rows_after);
      cost.surge_us += us;
      cost.elapsed_us += us;
    }
    g.buffered_rows = total % config_.buffer_capacity_rows;
    g.buffered_random_rows = mean_randomness * static_cast<double>(g.buffered_rows);
    trace.groups.push_back(cost);
  }
  rows_ = rows_after;
  trace.op.selectivity = static_cast<double>(n) / static_cast<double>(rows_after);
}

Snapshot EnginePartition::snapshot() const {
  Snapshot snap;
  snap.schema = schema_;
  const std::size_t width = schema_.value_count();
  snap.keys.resize(rows_);
  snap.cells.resize(rows_ * width);
  for (std::uint64_t key = 0; key < rows_; ++key) snap.keys[key] = key;
  for (const auto& g : groups_) {
    const std::size_t gw = g.value_indices.size();
    for (std::uint64_t key = 0; key < rows_; ++key) {
      for (std::size_t c = 0; c < gw; ++c) snap.cells[key * width + g.value_indices[c]] = g.data[key * gw + c];
    }
  }
  return snap;
}

EnginePartition EnginePartition::restore(const Snapshot& snapshot, StorageStructure structure, SimConfig config,
                                         std::uint64_t data_seed) {
  const std::size_t width = snapshot.schema.value_count();
  if (snapshot.cells.size() != snapshot.keys.size() * width) {
    throw Error(ErrorCode::CorruptSnapshot, "cell count does not match key count");
  }
  for (std::size_t i = 0; i < snapshot.keys.size(); ++i) {
    if (snapshot.keys[i] != i) throw Error(ErrorCode::CorruptSnapshot, "snapshot keys are not a dense ascending range");
  }
  EnginePartition partition(snapshot.schema, std::move(structure), config, data_seed);
  const std::uint64_t rows = snapshot.keys.size();
  for (auto& g : partition.groups_) {
    const std::size_t gw = g.value_indices.size();
    g.data.resize(rows * gw);
    for (std::uint64_t key = 0; key < rows; ++key) {
      for (std::size_t c = 0; c < gw; ++c) g.data[key * gw + c] = snapshot.cells[key * width + g.value_indices[c]];
    }
    if (partition.structure_.engine == EngineKind::LsmRow && rows > 0) {
      g.l2_rows = rows;
      g.l2_files = partition.l2_file_count(g);
    }
  }
  partition.rows_ = rows;
  return partition;
}

std::vector<OpTrace> run_workload(EnginePartition& partition, const std::vector<AccessOp>& ops) {
  std::vector<OpTrace> traces;
  for (const auto& op : ops) {
    for (std::uint64_t i = 0; i < op.frequency; ++i) traces.push_back(partition.exec(op));
  }
  return traces;
}

// Snapshot file layout (little-endian):
//   "SSELSNAP" u32 version
//   str schema_name, u32 field_count, per field: str name, u8 role, u8 kind, u32 bytes
//   u64 rows, u64 width, u64 keys[rows], u64 cells[rows * width]
//   u64 fnv1a checksum of everything before it
namespace {
constexpr std::string_view kSnapshotMagic = "SSELSNAP";
constexpr std::uint32_t kSnapshotVersion = 1;
}  // namespace

std::vector<std::uint8_t> encode_snapshot(const Snapshot& snapshot) {
  ByteWriter w;
  w.magic(kSnapshotMagic);
  w.u32(kSnapshotVersion);
  w.str(snapshot.schema.name());
  w.u32(static_cast<std::uint32_t>(snapshot.schema.fields().size()));
  for (const auto& f : snapshot.schema.fields()) {
    w.str(f.name);
    w.u8(f.role == FieldRole::Key ? 0 : 1);
    w.u8(f.length_kind == LengthKind::Fixed ? 0 : 1);
    w.u32(f.avg_length_bytes);
  }
  w.u64(snapshot.keys.size());
  w.u64(snapshot.schema.value_count());
  for (auto k : snapshot.keys) w.u64(k);
  for (auto c : snapshot.cells) w.u64(c);
  auto bytes = w.take();
  const auto checksum = fnv1a(bytes);
  ByteWriter tail;
  tail.u64(checksum);
  bytes.insert(bytes.end(), tail.bytes().begin(), tail.bytes().end());
  return bytes;
}

Snapshot decode_snapshot(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 + 4 + 8) throw Error(ErrorCode::CorruptSnapshot, "snapshot too short");
  ByteReader r(bytes, ErrorCode::CorruptSnapshot);
  if (!r.magic(kSnapshotMagic)) r.fail("bad snapshot magic");
  const auto version = r.u32();
  if (version != kSnapshotVersion) {
    throw Error(ErrorCode::UnsupportedVersion, "snapshot version " + std::to_string(version));
  }
  const auto body = bytes.first(bytes.size() - 8);
  ByteReader tail(bytes.last(8), ErrorCode::CorruptSnapshot);
  if (fnv1a(body) != tail.u64()) r.fail("snapshot checksum mismatch");

  const auto name = r.str();
  const auto field_count = r.u32();
  r.expect_at_least(field_count, 10);
  std::vector<FieldSpec> fields;
  for (std::uint32_t i = 0; i < field_count; ++i) {
    FieldSpec f;
    f.name = r.str();
    f.role = r.u8() == 0 ? FieldRole::Key : FieldRole::Value;
    f.length_kind = r.u8() == 0 ? LengthKind::Fixed : LengthKind::Variable;
    f.avg_length_bytes = r.u32();
    fields.push_back(std::move(f));
  }
  Snapshot snap;
  try {
    snap.schema = TableSchema(name, std::move(fields));
  } catch (const Error& e) {
    r.fail(std::string("invalid schema in snapshot: ") + e.what());
  }
  const auto rows = r.u64();
  const auto width = r.u64();
  if (width != snap.schema.value_count()) r.fail("snapshot width does not match schema");
  r.expect_at_least(rows, 8);
  snap.keys.resize(rows);
  for (auto& k : snap.keys) k = r.u64();
  if (width != 0) r.expect_at_least(rows * width, 8);
  snap.cells.resize(rows * width);
  for (auto& c : snap.cells) c = r.u64();
  if (r.remaining() != 8) r.fail("trailing bytes in snapshot");
  return snap;
}

void write_snapshot_file(const Snapshot& snapshot, const std::filesystem::path& path) {
  write_file_atomic(path, encode_snapshot(snapshot));
}

Snapshot read_snapshot_file(const std::filesystem::path& path) { return decode_snapshot(read_file_bytes(path)); }

}  // namespace ssel
