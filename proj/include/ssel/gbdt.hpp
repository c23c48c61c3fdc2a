#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ssel/binary_io.hpp"
#include "ssel/features.hpp"

namespace ssel {

using FeatureRow = std::array<double, kFeatureCount>;

struct GbdtParams {
  std::uint32_t num_trees = 100;
  std::uint32_t max_depth = 4;
  double learning_rate = 0.1;
  std::uint32_t min_leaf = 5;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // go left when x[feature] <= threshold
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;

  bool operator==(const TreeNode&) const = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(const FeatureRow& x) const;
  bool operator==(const RegressionTree&) const = default;
};

// Squared-error gradient boosting with exact (presorted) splits.
class BoostedRegressor {
 public:
  BoostedRegressor() = default;

  // Fits `y` with optional per-sample weights (empty = uniform).
  static BoostedRegressor fit(std::span<const FeatureRow> x, std::span<const double> y, std::span<const double> w,
                              const GbdtParams& params);

  double predict(const FeatureRow& x) const;
  // Prediction using only the first `trees` trees.
  double predict_prefix(const FeatureRow& x, std::size_t trees) const;

  double base_prediction() const { return base_; }
  double learning_rate() const { return learning_rate_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }

  static BoostedRegressor constant(double value) {
    BoostedRegressor r;
    r.base_ = value;
    return r;
  }

  void write(ByteWriter& w) const;
  static BoostedRegressor read(ByteReader& r);

  bool operator==(const BoostedRegressor&) const = default;

 private:
  double base_ = 0.0;
  double learning_rate_ = 0.1;
  std::vector<RegressionTree> trees_;
};

}  // namespace ssel
