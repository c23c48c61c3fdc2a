#pragma once

#include <cstddef>
#include <vector>

namespace ssel {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct DbscanParams {
  double eps = 0.5;
  std::size_t min_pts = 8;  // neighbourhood size including the point itself
};

// Labels every point core, border or noise. Returns the noise flag per point.
std::vector<bool> dbscan_noise(const std::vector<Point2>& points, const DbscanParams& params);

// Noise points to drop, capped at `max_fraction` of the input: when more points
// are noise, only the ones farthest from any core point are dropped. With no
// core point at all nothing is dropped.
std::vector<bool> dbscan_outliers(const std::vector<Point2>& points, const DbscanParams& params,
                                  double max_fraction = 0.2);

}  // namespace ssel
