#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ssel/core.hpp"

namespace ssel {

struct RepresentativeQuery {
  ColumnSet columns;
  double weight = 0.0;
  std::uint64_t member_count = 0;

  bool operator==(const RepresentativeQuery&) const = default;
};

struct ColumnVector {
  std::string column;
  std::vector<double> coords;
};

struct Merge {
  ColumnSet a;
  ColumnSet b;
  double distance = 0.0;
};

struct Dendrogram {
  std::vector<std::string> leaves;  // in input order
  std::vector<Merge> merges;        // non-decreasing distance
};

// Cost of one execution of a read op, used to weight representative queries.
using QueryCost = std::function<double(const AccessOp&)>;

// Rows touched times bytes read per row (keys plus accessed columns).
QueryCost bytes_cost_proxy(const TableSchema& schema, std::uint64_t table_rows);

struct PruneOptions {
  double decay_alpha = 0.05;
  double theta = 0.01;
};

// Groups read ops by their effective column set; weight is the sum of
// (1-alpha)^age x frequency x cost. Groups below theta of the total weight are
// dropped. Sorted by descending weight. Throws EmptyWorkload without reads.
std::vector<RepresentativeQuery> prune(const Workload& workload, const TableSchema& schema, const QueryCost& cost,
                                       const PruneOptions& options = {});

std::vector<ColumnVector> vectorize(const std::vector<std::string>& columns,
                                    const std::vector<RepresentativeQuery>& reps);

// Average-linkage agglomerative clustering under the Euclidean metric. Ties
// go to the pair whose members' smallest names are lexicographically smallest.
Dendrogram cluster(const std::vector<ColumnVector>& vectors);

// Layouts from NSM down to DSM, one per dendrogram level, with all zero-distance
// merges collapsed into a single step.
std::vector<DataLayout> layouts_from_dendrogram(const Dendrogram& dendrogram, const TableSchema& schema);

std::vector<DataLayout> recommend_layouts(const std::vector<RepresentativeQuery>& reps, const TableSchema& schema);

// Convenience: prune then cluster. An empty read set yields {NSM, DSM}.
std::vector<DataLayout> recommend_layouts(const Workload& workload, const TableSchema& schema, const QueryCost& cost,
                                          const PruneOptions& options = {});

// Baseline: greedily peel off the columns of the most important remaining query.
// Each representative query in turn seeds the first group, after which the rest
// follow in descending weight; leftover columns form a final group.
std::vector<DataLayout> recommend_layouts_query_oriented(const std::vector<RepresentativeQuery>& reps,
                                                         const TableSchema& schema);

// Every set partition of the value columns (Bell-number many); for small schemas only.
std::vector<DataLayout> all_layouts(const TableSchema& schema);

// True when every group of `fine` lies inside one group of `coarse`.
bool refines(const DataLayout& fine, const DataLayout& coarse);

}  // namespace ssel
