#include "ssel/dbscan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace ssel {

namespace {

// Cells of side eps/sqrt(2): any two points sharing a cell are neighbours, and
// every neighbour of a point lies within two cells of it.
class Grid {
 public:
  Grid(const std::vector<Point2>& points, double eps) : points_(points), side_(eps / std::sqrt(2.0)) {
    for (std::size_t i = 0; i < points.size(); ++i) cells_[key(points[i])].push_back(i);
  }

  std::pair<std::int64_t, std::int64_t> key(const Point2& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x / side_)), static_cast<std::int64_t>(std::floor(p.y / side_))};
  }

  const std::vector<std::size_t>* cell(std::int64_t cx, std::int64_t cy) const {
    auto it = cells_.find({cx, cy});
    return it == cells_.end() ? nullptr : &it->second;
  }

  const std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>>& cells() const { return cells_; }

 private:
  const std::vector<Point2>& points_;
  double side_;
  std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>> cells_;
};

double dist2(const Point2& a, const Point2& b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

std::vector<bool> core_points(const std::vector<Point2>& points, const Grid& grid, const DbscanParams& params) {
  std::vector<bool> core(points.size(), false);
  const double eps2 = params.eps * params.eps;
  for (const auto& [cell_key, members] : grid.cells()) {
    if (members.size() >= params.min_pts) {
      for (auto i : members) core[i] = true;
      continue;
    }
    for (auto i : members) {
      std::size_t count = 0;
      for (std::int64_t dx = -2; dx <= 2 && count < params.min_pts; ++dx) {
        for (std::int64_t dy = -2; dy <= 2 && count < params.min_pts; ++dy) {
          const auto* other = grid.cell(cell_key.first + dx, cell_key.second + dy);
          if (!other) continue;
          for (auto j : *other) {
            if (dist2(points[i], points[j]) <= eps2 && ++count >= params.min_pts) break;
          }
        }
      }
      core[i] = count >= params.min_pts;
    }
  }
  return core;
}

}  // namespace

std::vector<bool> dbscan_noise(const std::vector<Point2>& points, const DbscanParams& params) {
  if (!(params.eps > 0.0) || params.min_pts == 0) throw std::invalid_argument("dbscan needs eps > 0 and min_pts > 0");
  Grid grid(points, params.eps);
  const auto core = core_points(points, grid, params);
  const double eps2 = params.eps * params.eps;
  std::vector<bool> noise(points.size(), false);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (core[i]) continue;
    const auto [cx, cy] = grid.key(points[i]);
    bool reachable = false;
    for (std::int64_t dx = -2; dx <= 2 && !reachable; ++dx) {
      for (std::int64_t dy = -2; dy <= 2 && !reachable; ++dy) {
        const auto* other = grid.cell(cx + dx, cy + dy);
        if (!other) continue;
        for (auto j : *other) {
          if (core[j] && dist2(points[i], points[j]) <= eps2) {
            reachable = true;
            break;
          }
        }
      }
    }
    noise[i] = !reachable;
  }
  return noise;
}

std::vector<bool> dbscan_outliers(const std::vector<Point2>& points, const DbscanParams& params, double max_fraction) {
  auto noise = dbscan_noise(points, params);
  const auto noise_count = static_cast<std::size_t>(std::count(noise.begin(), noise.end(), true));
  const auto cap = static_cast<std::size_t>(std::floor(max_fraction * static_cast<double>(points.size())));
  if (noise_count <= cap) return noise;

  std::vector<Point2> cores;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!noise[i]) cores.push_back(points[i]);
  }
  std::vector<bool> drop(points.size(), false);
  if (cores.empty()) return drop;

  // Distance from each noise point to the nearest cluster member. Cells are
  // visited in order of their box distance so the search stops early.
  const double side = params.eps;
  std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>> cells;
  for (std::size_t c = 0; c < cores.size(); ++c) {
    cells[{static_cast<std::int64_t>(std::floor(cores[c].x / side)),
           static_cast<std::int64_t>(std::floor(cores[c].y / side))}]
        .push_back(c);
  }
  auto box_gap = [side](double v, std::int64_t cell) {
    const double lo = static_cast<double>(cell) * side, hi = lo + side;
    return v < lo ? lo - v : (v > hi ? v - hi : 0.0);
  };

  std::vector<std::pair<double, std::size_t>> ranked;
  std::vector<std::pair<double, const std::vector<std::size_t>*>> order;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!noise[i]) continue;
    order.clear();
    for (const auto& [k, members] : cells) {
      const double gx = box_gap(points[i].x, k.first), gy = box_gap(points[i].y, k.second);
      order.emplace_back(gx * gx + gy * gy, &members);
    }
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [bound, members] : order) {
      if (bound > best) break;
      for (auto c : *members) best = std::min(best, dist2(points[i], cores[c]));
    }
    ranked.emplace_back(best, i);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; k < cap && k < ranked.size(); ++k) drop[ranked[k].second] = true;
  return drop;
}

}  // namespace ssel
