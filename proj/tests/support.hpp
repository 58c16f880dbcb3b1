#pragma once

// Synthetic clouds and brute-force oracles shared by the unit and acceptance
// suites. Nothing here calls into the kd-tree or the metric pipeline.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "phm/cloud.hpp"

namespace phm::testing {

inline std::uint8_t clamp_channel(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

inline Rgb gray(double v) {
  const auto c = clamp_channel(v);
  return {c, c, c};
}

/// Uniform points in a cube with uniformly random colors.
inline PointCloud random_cloud(std::size_t n, std::uint32_t seed, double side = 100.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> pos(0.0, side);
  std::uniform_int_distribution<int> chan(0, 255);
  std::vector<Point3> p(n);
  std::vector<Rgb> c(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = Point3(pos(rng), pos(rng), pos(rng));
    c[i] = Rgb{static_cast<std::uint8_t>(chan(rng)), static_cast<std::uint8_t>(chan(rng)),
               static_cast<std::uint8_t>(chan(rng))};
  }
  return PointCloud(std::move(p), std::move(c));
}

/// A gently curved sheet sampled at roughly unit spacing, colored with a
/// smooth pattern plus fine stripes so that it carries both flat and textured
/// regions. Channels stay away from 0 and 255 so moderate noise rarely clips.
inline PointCloud textured_surface(std::size_t n, std::uint32_t seed) {
  std::mt19937 rng(seed);
  const double side = std::sqrt(static_cast<double>(n));
  std::uniform_real_distribution<double> pos(0.0, side);
  std::vector<Point3> p(n);
  std::vector<Rgb> c(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = pos(rng);
    const double y = pos(rng);
    const double z = 0.08 * side * std::sin(x / side * 3.0) * std::cos(y / side * 2.0);
    p[i] = Point3(x, y, z);
    const double base = 128.0 + 45.0 * std::sin(x / 9.0) * std::cos(y / 13.0);
    const double stripes = x > side / 2 ? 25.0 * std::sin(1.7 * x + 0.9 * y) : 0.0;
    const double v = base + stripes;
    c[i] = Rgb{clamp_channel(v + 10.0), clamp_channel(v), clamp_channel(v - 10.0)};
  }
  return PointCloud(std::move(p), std::move(c));
}

/// Same geometry, each point's channels shifted by one shared Gaussian draw.
inline PointCloud with_luminance_noise(const PointCloud& cloud, double sigma, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<Point3> p(cloud.positions().begin(), cloud.positions().end());
  std::vector<Rgb> c(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double d = noise(rng);
    const Rgb& o = cloud.colors()[i];
    c[i] = Rgb{clamp_channel(o[0] + d), clamp_channel(o[1] + d), clamp_channel(o[2] + d)};
  }
  return PointCloud(std::move(p), std::move(c));
}

/// Same colors, each coordinate perturbed by independent Gaussian noise.
inline PointCloud with_geometry_jitter(const PointCloud& cloud, double sigma, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<Point3> p(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double dx = noise(rng);
    const double dy = noise(rng);
    const double dz = noise(rng);
    p[i] = cloud.position(i) + Point3(dx, dy, dz);
  }
  std::vector<Rgb> c(cloud.colors().begin(), cloud.colors().end());
  return PointCloud(std::move(p), std::move(c));
}

/// Indices of the k nearest points by exhaustive scan, ordered by
/// (distance, index); `skip` is left out.
inline std::vector<std::size_t> brute_knn(std::span<const Point3> pts, const Point3& q, std::size_t k,
                                          std::size_t skip = std::numeric_limits<std::size_t>::max()) {
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (i != skip) all.emplace_back((pts[i] - q).squaredNorm(), i);
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < std::min(k, all.size()); ++i) out.push_back(all[i].second);
  return out;
}

/// Mean distance from each point to its nearest other point, by exhaustive scan
/// over a strided subset of at most `samples` query points.
inline double mean_nn_spacing(const PointCloud& cloud, std::size_t samples = 500) {
  const std::size_t stride = std::max<std::size_t>(1, cloud.size() / samples);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < cloud.size(); i += stride) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cloud.size(); ++j)
      if (j != i) best = std::min(best, (cloud.position(j) - cloud.position(i)).squaredNorm());
    sum += std::sqrt(best);
    ++count;
  }
  return sum / static_cast<double>(count);
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("phm_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace phm::testing
