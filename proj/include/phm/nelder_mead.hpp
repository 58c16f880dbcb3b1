#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

namespace phm {

struct SimplexOptions {
  double diameter_tolerance = 1e-8;
  std::size_t max_iterations = 10000;
};

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Downhill simplex (Nelder-Mead) minimization with the standard reflection,
/// expansion, contraction and shrink coefficients (1, 2, 1/2, 1/2). The
/// starting simplex perturbs each coordinate by 5% (0.00025 for zeros).
/// Stops once every vertex lies within `diameter_tolerance` of the best one.
template <typename Objective>
SimplexResult nelder_mead(Objective&& f, std::vector<double> x0, const SimplexOptions& opt = {}) {
  const std::size_t n = x0.size();
  std::vector<std::vector<double>> pts(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] = x0[i] != 0.0 ? 1.05 * x0[i] : 0.00025;
  std::vector<double> vals(n + 1);
  for (std::size_t i = 0; i <= n; ++i) vals[i] = f(pts[i]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);
  auto blend = [&](const std::vector<double>& from, double t, std::vector<double>& out) {
    // out = centroid + t * (from - centroid)
    for (std::size_t k = 0; k < n; ++k) out[k] = centroid[k] + t * (from[k] - centroid[k]);
  };

  SimplexResult result;
  for (;;) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[n - 1];

    double diameter = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < n; ++k) d2 += (pts[i][k] - pts[best][k]) * (pts[i][k] - pts[best][k]);
      diameter = std::max(diameter, std::sqrt(d2));
    }
    if (diameter < opt.diameter_tolerance) {
      result.converged = true;
      break;
    }
    if (result.iterations >= opt.max_iterations) break;
    ++result.iterations;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < n; ++k) centroid[k] += pts[i][k] / static_cast<double>(n);
    }

    blend(pts[worst], -1.0, trial);
    const double f_reflect = f(trial);
    if (f_reflect < vals[best]) {
      blend(pts[worst], -2.0, trial2);
      const double f_expand = f(trial2);
      if (f_expand < f_reflect) {
        pts[worst] = trial2;
        vals[worst] = f_expand;
      } else {
        pts[worst] = trial;
        vals[worst] = f_reflect;
      }
      continue;
    }
    if (f_reflect < vals[second_worst]) {
      pts[worst] = trial;
      vals[worst] = f_reflect;
      continue;
    }
    // Contract toward the better of the worst vertex and its reflection.
    const bool outside = f_reflect < vals[worst];
    blend(outside ? trial : pts[worst], 0.5, trial2);
    const double f_contract = f(trial2);
    if (f_contract < std::min(f_reflect, vals[worst])) {
      pts[worst] = trial2;
      vals[worst] = f_contract;
      continue;
    }
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t k = 0; k < n; ++k) pts[i][k] = pts[best][k] + 0.5 * (pts[i][k] - pts[best][k]);
      vals[i] = f(pts[i]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
  result.x = pts[best];
  result.value = vals[best];
  return result;
}

}  // namespace phm
