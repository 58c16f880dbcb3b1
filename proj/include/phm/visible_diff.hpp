#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include <Eigen/Core>
#include <Eigen/QR>

#include "phm/cloud.hpp"
#include "phm/error.hpp"
#include "phm/spatial_index.hpp"

namespace phm {

inline constexpr double kDefaultAlpha = 4.5;
inline constexpr std::size_t kDefaultArOrder = 20;

struct LuminancePsnr {
  double psnr_y = 0.0;  // +inf when both directed errors are exactly zero
  bool perfect = false;  // symmetric MSE fell below 1
  double mse = 0.0;      // max of the two directed errors
  double mse_ref_to_dist = 0.0;
  double mse_dist_to_ref = 0.0;
};

/// Mean squared luminance difference between each point of `from` and its
/// nearest neighbor in `to`.
inline double directed_luminance_mse(const PointCloud& from, const PointCloud& to, const SpatialIndex& to_index) {
  double sum = 0.0;
  for (std::size_t i = 0; i < from.size(); ++i) {
    const auto nn = to_index.nearest(from.position(i));
    const double diff = from.luminance(i) - to.luminance(nn.index);
    sum += diff * diff;
  }
  return sum / static_cast<double>(from.size());
}

inline LuminancePsnr symmetric_luminance_psnr(const PointCloud& ref, const PointCloud& dist) {
  const SpatialIndex ref_index(ref.positions());
  const SpatialIndex dist_index(dist.positions());
  LuminancePsnr out;
  out.mse_ref_to_dist = directed_luminance_mse(ref, dist, dist_index);
  out.mse_dist_to_ref = directed_luminance_mse(dist, ref, ref_index);
  out.mse = std::max(out.mse_ref_to_dist, out.mse_dist_to_ref);
  out.perfect = out.mse < 1.0;
  out.psnr_y = out.mse > 0.0 ? 10.0 * std::log10(255.0 * 255.0 / out.mse) : std::numeric_limits<double>::infinity();
  return out;
}

struct ARSolution {
  Eigen::VectorXd theta;      // one coefficient per neighbor rank
  Eigen::VectorXd residuals;  // one per reference point
};

struct TextureComplexity {
  ARSolution solution;
  double complexity = 0.0;
};

/// Row i holds the luminance of point i's `order` nearest neighbors (point i
/// itself excluded), nearest first.
inline Eigen::MatrixXd ar_design_matrix(const PointCloud& cloud, std::size_t order) {
  if (order == 0) throw Error(ErrorKind::DomainError, "AR order must be positive");
  if (cloud.size() <= order)
    throw Error(ErrorKind::CloudTooSmall, "cloud needs more than " + std::to_string(order) + " points");
  const SpatialIndex index(cloud.positions());
  Eigen::MatrixXd design(static_cast<Eigen::Index>(cloud.size()), static_cast<Eigen::Index>(order));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto nbrs = index.knn(cloud.position(i), order, i);
    for (std::size_t k = 0; k < order; ++k)
      design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = cloud.luminance(nbrs[k].index);
  }
  return design;
}

inline Eigen::VectorXd luminance_vector(const PointCloud& cloud) {
  const auto lum = cloud.luminance();
  return Eigen::Map<const Eigen::VectorXd>(lum.data(), static_cast<Eigen::Index>(lum.size()));
}

/// log2(1 + mean |e|) for a residual vector.
inline double complexity_from_residuals(const Eigen::VectorXd& residuals) {
  return std::log2(1.0 + residuals.cwiseAbs().mean());
}

/// Fits one global auto-regressive model predicting each point's luminance
/// from its neighbors' and scores the leftover as texture complexity. The
/// minimum-norm least-squares solution is used, so rank-deficient designs
/// (flat luminance) are well defined.
inline TextureComplexity ar_texture_complexity(const PointCloud& ref, std::size_t order = kDefaultArOrder) {
  const Eigen::MatrixXd design = ar_design_matrix(ref, order);
  const Eigen::VectorXd lum = luminance_vector(ref);
  TextureComplexity out;
  out.solution.theta = design.completeOrthogonalDecomposition().solve(lum);
  out.solution.residuals = lum - design * out.solution.theta;
  out.complexity = complexity_from_residuals(out.solution.residuals);
  return out;
}

/// Normalizer that maps compensated PSNR into [0, 1].
inline double visibility_normalizer(double alpha) { return 10.0 * std::log10(255.0 * 255.0) + alpha * 8.0; }

/// (PSNR_Y + alpha * C) / normalizer, clamped to 1 when the luminance error
/// is negligible or the value overshoots.
inline double masked_visible_difference(double psnr_y, bool perfect, double complexity, double alpha) {
  if (alpha < 0.0) throw Error(ErrorKind::DomainError, "alpha must be nonnegative");
  if (perfect) return 1.0;
  const double value = (psnr_y + alpha * complexity) / visibility_normalizer(alpha);
  return std::min(value, 1.0);
}

struct VisibleDifference {
  double psnr_y = 0.0;
  bool perfect = false;
  double mse = 0.0;
  double complexity = 0.0;
  double d_h = 0.0;
};

inline VisibleDifference visible_difference(const PointCloud& ref, const PointCloud& dist, double alpha = kDefaultAlpha,
                                            std::size_t order = kDefaultArOrder) {
  if (alpha < 0.0) throw Error(ErrorKind::DomainError, "alpha must be nonnegative");
  const auto psnr = symmetric_luminance_psnr(ref, dist);
  const auto texture = ar_texture_complexity(ref, order);
  VisibleDifference out;
  out.psnr_y = psnr.psnr_y;
  out.perfect = psnr.perfect;
  out.mse = psnr.mse;
  out.complexity = texture.complexity;
  out.d_h = masked_visible_difference(psnr.psnr_y, psnr.perfect, texture.complexity, alpha);
  return out;
}

}  // namespace phm
