#include "ssel/gbdt.hpp"

#include <algorithm>
#include <numeric>

namespace ssel {

double RegressionTree::predict(const FeatureRow& x) const {
  std::int32_t i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(i)].value;
}

double BoostedRegressor::predict(const FeatureRow& x) const { return predict_prefix(x, trees_.size()); }

double BoostedRegressor::predict_prefix(const FeatureRow& x, std::size_t trees) const {
  double f = base_;
  const std::size_t n = std::min(trees, trees_.size());
  for (std::size_t t = 0; t < n; ++t) f += trees_[t].predict(x);
  return f;
}

namespace {

struct Split {
  double gain = 0.0;
  std::int32_t feature = -1;
  double threshold = 0.0;
};

struct Running {
  double w = 0.0;
  double s = 0.0;
  std::uint32_t count = 0;
  double last = 0.0;
};

RegressionTree grow_tree(std::span<const FeatureRow> x, std::span<const double> residual, std::span<const double> w,
                         const std::vector<std::vector<std::uint32_t>>& sorted, const std::vector<std::size_t>& features,
                         const GbdtParams& params) {
  const std::size_t n = x.size();
  RegressionTree tree;
  tree.nodes.emplace_back();
  std::vector<std::int32_t> node_of(n, 0);
  std::vector<std::int32_t> frontier{0};

  auto node_stats = [&](std::size_t node_count) {
    std::vector<Running> totals(node_count);
    for (std::size_t i = 0; i < n; ++i) {
      if (node_of[i] < 0) continue;
      auto& t = totals[static_cast<std::size_t>(node_of[i])];
      t.w += w[i];
      t.s += w[i] * residual[i];
      ++t.count;
    }
    return totals;
  };

  for (std::uint32_t depth = 0; depth < params.max_depth && !frontier.empty(); ++depth) {
    const std::size_t node_count = tree.nodes.size();
    const auto totals = node_stats(node_count);
    std::vector<char> active(node_count, 0);
    for (auto k : frontier) active[static_cast<std::size_t>(k)] = 1;
    std::vector<Split> best(node_count);

    for (auto f : features) {
      std::vector<Running> run(node_count);
      for (auto i : sorted[f]) {
        const auto k = node_of[i];
        if (k < 0 || !active[static_cast<std::size_t>(k)]) continue;
        auto& r = run[static_cast<std::size_t>(k)];
        const auto& t = totals[static_cast<std::size_t>(k)];
        const double v = x[i][f];
        if (r.count >= params.min_leaf && t.count - r.count >= params.min_leaf && v > r.last) {
          const double wr = t.w - r.w;
          if (r.w > 0.0 && wr > 0.0) {
            const double sr = t.s - r.s;
            const double gain = r.s * r.s / r.w + sr * sr / wr - t.s * t.s / t.w;
            auto& b = best[static_cast<std::size_t>(k)];
            if (gain > b.gain + 1e-12 * std::abs(t.s * t.s / t.w)) {
              b.gain = gain;
              b.feature = static_cast<std::int32_t>(f);
              b.threshold = r.last + (v - r.last) / 2.0;
              if (!(b.threshold < v)) b.threshold = r.last;
            }
          }
        }
        r.w += w[i];
        r.s += w[i] * residual[i];
        ++r.count;
        r.last = v;
      }
    }

    std::vector<std::int32_t> next;
    for (auto k : frontier) {
      const auto& b = best[static_cast<std::size_t>(k)];
      if (b.feature < 0 || !(b.gain > 0.0)) continue;
      const auto left = static_cast<std::int32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& node = tree.nodes[static_cast<std::size_t>(k)];
      node.feature = b.feature;
      node.threshold = b.threshold;
      node.left = left;
      node.right = left + 1;
      next.push_back(left);
      next.push_back(left + 1);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto k = node_of[i];
      if (k < 0) continue;
      const auto& node = tree.nodes[static_cast<std::size_t>(k)];
      if (node.feature >= 0 && active[static_cast<std::size_t>(k)]) {
        node_of[i] = x[i][static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
      }
    }
    frontier = std::move(next);
  }

  const auto totals = node_stats(tree.nodes.size());
  for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
    auto& node = tree.nodes[k];
    if (node.feature < 0) node.value = totals[k].w > 0.0 ? params.learning_rate * totals[k].s / totals[k].w : 0.0;
  }
  return tree;
}

}  // namespace

BoostedRegressor BoostedRegressor::fit(std::span<const FeatureRow> x, std::span<const double> y,
                                       std::span<const double> w_in, const GbdtParams& params) {
  if (x.size() != y.size() || (!w_in.empty() && w_in.size() != y.size())) {
    throw Error(ErrorCode::InvalidConfig, "feature, target and weight lengths differ");
  }
  if (x.empty()) throw Error(ErrorCode::EmptyInput, "cannot fit a regressor on no samples");
  if (!(params.learning_rate > 0.0 && params.learning_rate <= 1.0) || params.min_leaf == 0) {
    throw Error(ErrorCode::InvalidConfig, "learning rate must lie in (0,1] and min_leaf must be positive");
  }
  const std::size_t n = x.size();
  std::vector<double> w(w_in.begin(), w_in.end());
  if (w.empty()) w.assign(n, 1.0);

  BoostedRegressor model;
  model.learning_rate_ = params.learning_rate;
  double sw = 0.0, swy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += w[i];
    swy += w[i] * y[i];
  }
  model.base_ = sw > 0.0 ? swy / sw : 0.0;

  std::vector<std::size_t> features;
  std::vector<std::vector<std::uint32_t>> sorted(kFeatureCount);
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    const bool varies = std::any_of(x.begin(), x.end(), [&](const FeatureRow& r) { return r[f] != x[0][f]; });
    if (!varies) continue;
    features.push_back(f);
    auto& idx = sorted[f];
    idx.resize(n);
    std::iota(idx.begin(), idx.end(), 0u);
    std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) { return x[a][f] < x[b][f]; });
  }

  std::vector<double> fitted(n, model.base_);
  std::vector<double> residual(n);
  for (std::uint32_t t = 0; t < params.num_trees && !features.empty(); ++t) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - fitted[i];
    auto tree = grow_tree(x, residual, w, sorted, features, params);
    if (tree.nodes.size() == 1) break;  // no split improves the fit any further
    for (std::size_t i = 0; i < n; ++i) fitted[i] += tree.predict(x[i]);
    model.trees_.push_back(std::move(tree));
  }
  return model;
}

void BoostedRegressor::write(ByteWriter& w) const {
  w.f64(base_);
  w.f64(learning_rate_);
  w.u32(static_cast<std::uint32_t>(trees_.size()));
  for (const auto& t : trees_) {
    w.u32(static_cast<std::uint32_t>(t.nodes.size()));
    for (const auto& n : t.nodes) {
      w.i32(n.feature);
      w.f64(n.threshold);
      w.i32(n.left);
      w.i32(n.right);
      w.f64(n.value);
    }
  }
}

BoostedRegressor BoostedRegressor::read(ByteReader& r) {
  BoostedRegressor m;
  m.base_ = r.f64();
  m.learning_rate_ = r.f64();
  const auto tree_count = r.u32();
  r.expect_at_least(tree_count, 4);
  m.trees_.resize(tree_count);
  for (auto& t : m.trees_) {
    const auto node_count = r.u32();
    r.expect_at_least(node_count, 28);
    if (node_count == 0) r.fail("tree without nodes");
    t.nodes.resize(node_count);
    for (auto& n : t.nodes) {
      n.feature = r.i32();
      n.threshold = r.f64();
      n.left = r.i32();
      n.right = r.i32();
      n.value = r.f64();
    }
    for (std::size_t k = 0; k < t.nodes.size(); ++k) {
      const auto& n = t.nodes[k];
      if (n.feature < 0) continue;
      const auto ok = [&](std::int32_t c) {
        return c > static_cast<std::int32_t>(k) && c < static_cast<std::int32_t>(node_count);
      };
      if (n.feature >= static_cast<std::int32_t>(kFeatureCount) || !ok(n.left) || !ok(n.right)) {
        r.fail("malformed tree node");
      }
    }
  }
  return m;
}

}  // namespace ssel
