#include "ssel/layout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace ssel {

QueryCost bytes_cost_proxy(const TableSchema& schema, std::uint64_t table_rows) {
  return [&schema, table_rows](const AccessOp& op) {
    double bytes = static_cast<double>(schema.key_bytes());
    for (const auto& c : effective_columns(op, schema)) {
      bytes += schema.value_field(schema.require_value_index(c)).avg_length_bytes;
    }
    const std::uint64_t rows =
        op.type == OpType::RangeScan ? std::min(op.result_rows, table_rows) : std::uint64_t{1};
    return bytes * static_cast<double>(std::max<std::uint64_t>(rows, 1));
  };
}

std::vector<RepresentativeQuery> prune(const Workload& workload, const TableSchema& schema, const QueryCost& cost,
                                       const PruneOptions& options) {
  if (!(options.decay_alpha >= 0.0 && options.decay_alpha < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "decay alpha must lie in [0,1)");
  }
  std::map<ColumnSet, RepresentativeQuery> groups;
  for (const auto& op : workload.ops) {
    if (op.type == OpType::Insert) continue;
    auto columns = effective_columns(op, schema);
    auto& rep = groups[columns];
    rep.columns = std::move(columns);
    const double decay = std::pow(1.0 - options.decay_alpha, static_cast<double>(op.age));
    rep.weight += decay * static_cast<double>(op.frequency) * std::max(cost(op), 0.0);
    rep.member_count += op.frequency;
  }
  if (groups.empty()) throw Error(ErrorCode::EmptyWorkload, "workload has no read operations");

  double total = 0.0;
  for (const auto& [_, rep] : groups) total += rep.weight;
  std::vector<RepresentativeQuery> reps;
  for (auto& [_, rep] : groups) {
    if (rep.weight > 0.0 && rep.weight >= options.theta * total) reps.push_back(std::move(rep));
  }
  if (reps.empty()) throw Error(ErrorCode::EmptyWorkload, "every read operation has zero weight");
  std::stable_sort(reps.begin(), reps.end(), [](const auto& a, const auto& b) { return a.weight > b.weight; });
  return reps;
}

std::vector<ColumnVector> vectorize(const std::vector<std::string>& columns,
                                    const std::vector<RepresentativeQuery>& reps) {
  std::vector<ColumnVector> out;
  for (const auto& c : columns) {
    ColumnVector v{c, std::vector<double>(reps.size(), 0.0)};
    for (std::size_t j = 0; j < reps.size(); ++j) {
      if (reps[j].columns.count(c)) v.coords[j] = reps[j].weight;
    }
    out.push_back(std::move(v));
  }
  return out;
}

namespace {

bool nearly_equal(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b));
}

}  // namespace

Dendrogram cluster(const std::vector<ColumnVector>& vectors) {
  Dendrogram d;
  const std::size_t n = vectors.size();
  struct Cluster {
    ColumnSet members;
    std::string min_name;
    double size = 1.0;
    bool alive = true;
  };
  std::vector<Cluster> clusters;
  for (const auto& v : vectors) {
    d.leaves.push_back(v.column);
    clusters.push_back({{v.column}, v.column});
  }
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < vectors[i].coords.size(); ++k) {
        const double diff = vectors[i].coords[k] - vectors[j].coords[k];
        s += diff * diff;
      }
      dist[i * n + j] = dist[j * n + i] = std::sqrt(s);
    }
  }

  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t bi = n, bj = n;
    double best = std::numeric_limits<double>::infinity();
    std::pair<std::string, std::string> best_names;
    for (std::size_t i = 0; i < n; ++i) {
      if (!clusters[i].alive) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!clusters[j].alive) continue;
        const double dij = dist[i * n + j];
        auto names = std::minmax(clusters[i].min_name, clusters[j].min_name);
        const std::pair<std::string, std::string> key{names.first, names.second};
        const bool better = bi == n || (dij < best && !nearly_equal(dij, best)) ||
                            (nearly_equal(dij, best) && key < best_names);
        if (better) {
          bi = i;
          bj = j;
          best = dij;
          best_names = key;
        }
      }
    }
    auto& a = clusters[bi];
    auto& b = clusters[bj];
    d.merges.push_back({a.members, b.members, best});
    for (std::size_t k = 0; k < n; ++k) {
      if (k == bi || k == bj || !clusters[k].alive) continue;
      const double merged = (a.size * dist[bi * n + k] + b.size * dist[bj * n + k]) / (a.size + b.size);
      dist[bi * n + k] = dist[k * n + bi] = merged;
    }
    a.members.insert(b.members.begin(), b.members.end());
    a.min_name = std::min(a.min_name, b.min_name);
    a.size += b.size;
    b.alive = false;
  }
  return d;
}

std::vector<DataLayout> layouts_from_dendrogram(const Dendrogram& dendrogram, const TableSchema& schema) {
  double max_distance = 0.0;
  for (const auto& m : dendrogram.merges) max_distance = std::max(max_distance, m.distance);
  const auto is_zero = [&](double v) { return v <= 1e-12 * max_distance; };

  std::vector<ColumnSet> groups;
  for (const auto& leaf : dendrogram.leaves) groups.push_back({leaf});
  std::vector<DataLayout> levels{DataLayout{groups}};
  for (std::size_t i = 0; i < dendrogram.merges.size(); ++i) {
    const auto& m = dendrogram.merges[i];
    auto ia = std::find(groups.begin(), groups.end(), m.a);
    auto ib = std::find(groups.begin(), groups.end(), m.b);
    if (ia == groups.end() || ib == groups.end()) throw Error(ErrorCode::InvalidConfig, "malformed dendrogram");
    ia->insert(m.b.begin(), m.b.end());
    groups.erase(ib);
    const bool zero_run_continues =
        is_zero(m.distance) && i + 1 < dendrogram.merges.size() && is_zero(dendrogram.merges[i + 1].distance);
    if (!zero_run_continues) levels.push_back(DataLayout{groups});
  }

  std::vector<DataLayout> out;
  for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
    auto layout = it->canonical(schema);
    validate_layout(layout, schema);
    if (std::none_of(out.begin(), out.end(), [&](const DataLayout& l) { return l.same_partition(layout); })) {
      out.push_back(std::move(layout));
    }
  }
  return out;
}

std::vector<DataLayout> recommend_layouts(const std::vector<RepresentativeQuery>& reps, const TableSchema& schema) {
  const auto vectors = vectorize(schema.value_names(), reps);
  return layouts_from_dendrogram(cluster(vectors), schema);
}

std::vector<DataLayout> recommend_layouts(const Workload& workload, const TableSchema& schema, const QueryCost& cost,
                                          const PruneOptions& options) {
  try {
    return recommend_layouts(prune(workload, schema, cost, options), schema);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::EmptyWorkload) throw;
    auto nsm = DataLayout::nsm(schema), dsm = DataLayout::dsm(schema);
    if (nsm.same_partition(dsm)) return {nsm};
    return {nsm, dsm};
  }
}

std::vector<DataLayout> recommend_layouts_query_oriented(const std::vector<RepresentativeQuery>& reps,
                                                         const TableSchema& schema) {
  std::vector<DataLayout> out;
  const auto names = schema.value_names();
  for (std::size_t seed = 0; seed < std::max<std::size_t>(reps.size(), 1); ++seed) {
    std::vector<const RepresentativeQuery*> order;
    if (!reps.empty()) order.push_back(&reps[seed]);
    for (std::size_t j = 0; j < reps.size(); ++j) {
      if (j != seed) order.push_back(&reps[j]);
    }
    ColumnSet remaining(names.begin(), names.end());
    DataLayout layout;
    for (const auto* q : order) {
      ColumnSet group;
      for (const auto& c : q->columns) {
        if (remaining.erase(c)) group.insert(c);
      }
      if (!group.empty()) layout.groups.push_back(std::move(group));
    }
    if (!remaining.empty()) layout.groups.push_back(std::move(remaining));
    layout = layout.canonical(schema);
    validate_layout(layout, schema);
    if (std::none_of(out.begin(), out.end(), [&](const DataLayout& l) { return l.same_partition(layout); })) {
      out.push_back(std::move(layout));
    }
  }
  return out;
}

std::vector<DataLayout> all_layouts(const TableSchema& schema) {
  const auto names = schema.value_names();
  const std::size_t n = names.size();
  if (n > 12) throw Error(ErrorCode::InvalidConfig, "exhaustive layout enumeration is limited to 12 columns");
  std::vector<DataLayout> out;
  std::vector<std::size_t> block(n, 0);
  // Restricted growth strings: block[i] <= 1 + max(block[0..i-1]).
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t used) {
    if (i == n) {
      DataLayout l;
      l.groups.resize(used);
      for (std::size_t k = 0; k < n; ++k) l.groups[block[k]].insert(names[k]);
      out.push_back(l.canonical(schema));
      return;
    }
    for (std::size_t b = 0; b <= used && b < n; ++b) {
      block[i] = b;
      rec(i + 1, std::max(used, b + 1));
    }
  };
  if (n > 0) rec(0, 0);
  return out;
}

bool refines(const DataLayout& fine, const DataLayout& coarse) {
  for (const auto& g : fine.groups) {
    const bool inside = std::any_of(coarse.groups.begin(), coarse.groups.end(), [&](const ColumnSet& c) {
      return std::includes(c.begin(), c.end(), g.begin(), g.end());
    });
    if (!inside) return false;
  }
  return true;
}

}  // namespace ssel
