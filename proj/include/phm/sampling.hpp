#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "phm/cloud.hpp"
#include "phm/error.hpp"

namespace phm {

/// Greedy farthest point sampling. Returns `count` indices in selection order,
/// beginning with `start`; each next seed maximizes its distance to the seeds
/// chosen so far (lowest index wins ties).
inline std::vector<std::size_t> farthest_point_sample(std::span<const Point3> points, std::size_t count,
                                                      std::size_t start = 0) {
  const std::size_t n = points.size();
  if (n == 0) throw Error(ErrorKind::EmptyCloud, "cannot sample from an empty point set");
  if (count == 0) throw Error(ErrorKind::DomainError, "seed count must be positive");
  if (count > n) throw Error(ErrorKind::TooManySeeds, "requested more seeds than points");
  if (start >= n) throw Error(ErrorKind::DomainError, "start index out of range");

  std::vector<std::size_t> seeds;
  seeds.reserve(count);
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(n, false);
  std::size_t current = start;
  for (;;) {
    seeds.push_back(current);
    chosen[current] = true;
    min_d2[current] = 0.0;
    if (seeds.size() == count) break;
    std::size_t best = 0;
    double best_d2 = -1.0;
    const Point3& s = points[current];
    for (std::size_t i = 0; i < n; ++i) {
      const double d2 = (points[i] - s).squaredNorm();
      if (d2 < min_d2[i]) min_d2[i] = d2;
      // Duplicate points can leave unchosen candidates at distance 0.
      if (!chosen[i] && min_d2[i] > best_d2) {
        best_d2 = min_d2[i];
        best = i;
      }
    }
    current = best;
  }
  return seeds;
}

inline std::vector<std::size_t> farthest_point_sample(const PointCloud& cloud, std::size_t count,
                                                      std::size_t start = 0) {
  return farthest_point_sample(cloud.positions(), count, start);
}

}  // namespace phm
