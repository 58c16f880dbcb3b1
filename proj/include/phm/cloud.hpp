#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "phm/error.hpp"

namespace phm {

using Point3 = Eigen::Vector3d;
using Rgb = std::array<std::uint8_t, 3>;

/// BT.709 luma weights applied to 8-bit RGB. Not rounded.
constexpr double rgb_to_luminance(const Rgb& rgb) noexcept {
  return 0.2126 * rgb[0] + 0.7152 * rgb[1] + 0.0722 * rgb[2];
}

/// Colored point set. Positions, colors and luminance always have the same
/// nonzero length; luminance is derived from colors at construction.
class PointCloud {
 public:
  PointCloud(std::vector<Point3> positions, std::vector<Rgb> colors)
      : positions_(std::move(positions)), colors_(std::move(colors)) {
    if (positions_.empty()) throw Error(ErrorKind::EmptyCloud, "point cloud has no points");
    if (positions_.size() != colors_.size())
      throw Error(ErrorKind::ShapeError, "positions and colors differ in length");
    luminance_.reserve(colors_.size());
    for (const auto& c : colors_) luminance_.push_back(rgb_to_luminance(c));
  }

  std::size_t size() const noexcept { return positions_.size(); }

  std::span<const Point3> positions() const noexcept { return positions_; }
  std::span<const Rgb> colors() const noexcept { return colors_; }
  std::span<const double> luminance() const noexcept { return luminance_; }

  const Point3& position(std::size_t i) const { return positions_[i]; }
  double luminance(std::size_t i) const { return luminance_[i]; }

  friend bool operator==(const PointCloud& a, const PointCloud& b) {
    return a.positions_ == b.positions_ && a.colors_ == b.colors_ && a.luminance_ == b.luminance_;
  }

 private:
  std::vector<Point3> positions_;
  std::vector<Rgb> colors_;
  std::vector<double> luminance_;
};

}  // namespace phm
