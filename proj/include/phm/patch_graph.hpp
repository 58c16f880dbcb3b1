#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <lapacke.h>

#include "phm/cloud.hpp"
#include "phm/error.hpp"
#include "phm/sampling.hpp"
#include "phm/spatial_index.hpp"

namespace phm {

inline constexpr std::size_t kDefaultGraphNeighbors = 10;
inline constexpr std::size_t kDefaultPatchDivisor = 1000;
inline constexpr std::size_t kMaxPatchPoints = 3000;

/// Points of one cloud that fall in one Voronoi cell, with their attributes
/// copied out so the patch can be processed on its own.
struct SubCloud {
  std::vector<std::size_t> indices;  // into the parent cloud, ascending
  std::vector<Point3> positions;
  std::vector<double> luminance;

  std::size_t size() const noexcept { return indices.size(); }

  void push_back(const PointCloud& parent, std::size_t i) {
    indices.push_back(i);
    positions.push_back(parent.position(i));
    luminance.push_back(parent.luminance(i));
  }
};

struct PatchPair {
  std::size_t cell_id = 0;
  SubCloud ref;
  SubCloud dist;
};

/// Number of Voronoi cells for a reference of `n` points.
inline std::size_t default_patch_count(std::size_t n, std::size_t divisor = kDefaultPatchDivisor) {
  if (divisor == 0) throw Error(ErrorKind::DomainError, "patch divisor must be positive");
  return std::max<std::size_t>(1, n / divisor);
}

/// Cell id (seed rank) of the nearest seed for every point; ties go to the
/// lower seed id.
inline std::vector<std::size_t> assign_to_seeds(std::span<const Point3> seeds, std::span<const Point3> points) {
  const SpatialIndex seed_index(seeds);
  std::vector<std::size_t> cells(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) cells[i] = seed_index.nearest(points[i]).index;
  return cells;
}

/// Splits both clouds with the Voronoi diagram of `cells` farthest-point
/// seeds drawn from the reference. Every point lands in exactly one pair.
inline std::vector<PatchPair> partition_into_patch_pairs(const PointCloud& ref, const PointCloud& dist,
                                                         std::size_t cells) {
  const auto seed_ids = farthest_point_sample(ref, cells, 0);
  std::vector<Point3> seeds;
  seeds.reserve(seed_ids.size());
  for (auto id : seed_ids) seeds.push_back(ref.position(id));

  std::vector<PatchPair> pairs(cells);
  for (std::size_t l = 0; l < cells; ++l) pairs[l].cell_id = l;
  const auto ref_cells = assign_to_seeds(seeds, ref.positions());
  for (std::size_t i = 0; i < ref.size(); ++i) pairs[ref_cells[i]].ref.push_back(ref, i);
  const auto dist_cells = assign_to_seeds(seeds, dist.positions());
  for (std::size_t i = 0; i < dist.size(); ++i) pairs[dist_cells[i]].dist.push_back(dist, i);
  return pairs;
}

/// Evenly strided subset of at most `cap` points (identity when under the cap).
inline SubCloud subsample_uniform(const SubCloud& patch, std::size_t cap = kMaxPatchPoints) {
  if (patch.size() <= cap) return patch;
  SubCloud out;
  out.indices.reserve(cap);
  out.positions.reserve(cap);
  out.luminance.reserve(cap);
  for (std::size_t k = 0; k < cap; ++k) {
    const std::size_t i = k * patch.size() / cap;
    out.indices.push_back(patch.indices[i]);
    out.positions.push_back(patch.positions[i]);
    out.luminance.push_back(patch.luminance[i]);
  }
  return out;
}

struct WeightedEdge {
  std::size_t i = 0;  // i < j
  std::size_t j = 0;
  double weight = 0.0;
};

/// Symmetric K-nearest-neighbor graph with Gaussian edge weights.
struct PatchGraph {
  std::size_t n = 0;
  std::vector<WeightedEdge> edges;
  std::vector<double> degree;
  double sigma2 = 0.0;

  /// Dense combinatorial Laplacian D - W.
  Eigen::MatrixXd laplacian() const {
    const auto size = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(size, size);
    for (const auto& e : edges) {
      const auto i = static_cast<Eigen::Index>(e.i);
      const auto j = static_cast<Eigen::Index>(e.j);
      lap(i, j) -= e.weight;
      lap(j, i) -= e.weight;
    }
    for (std::size_t i = 0; i < n; ++i) lap(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = degree[i];
    return lap;
  }
};

/// Undirected edge set of the K-nearest-neighbor relation: (i, j) is an edge
/// when either point lists the other among its `k` nearest. Sorted by (i, j).
inline std::vector<std::pair<std::size_t, std::size_t>> knn_union_edges(std::span<const Point3> positions,
                                                                         std::size_t k) {
  const SpatialIndex index(positions);
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  edges.reserve(positions.size() * k);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (const auto& nb : index.knn(positions[i], k, i))
      edges.emplace_back(std::min(i, nb.index), std::max(i, nb.index));
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

inline PatchGraph build_patch_graph(std::span<const Point3> positions, std::size_t k = kDefaultGraphNeighbors) {
  if (k == 0) throw Error(ErrorKind::DomainError, "graph neighbor count must be positive");
  if (positions.size() < 2) throw Error(ErrorKind::DegeneratePatch, "patch has fewer than two points");
  const auto pairs = knn_union_edges(positions, std::min(k, positions.size() - 1));

  PatchGraph graph;
  graph.n = positions.size();
  graph.edges.reserve(pairs.size());
  double sum_sq = 0.0;
  for (const auto& [i, j] : pairs) sum_sq += (positions[i] - positions[j]).squaredNorm();
  graph.sigma2 = sum_sq / static_cast<double>(pairs.size());
  if (!(graph.sigma2 > 0.0)) throw Error(ErrorKind::DegeneratePatch, "all patch points coincide");

  graph.degree.assign(graph.n, 0.0);
  for (const auto& [i, j] : pairs) {
    const double w = std::exp(-(positions[i] - positions[j]).squaredNorm() / graph.sigma2);
    graph.edges.push_back({i, j, w});
    graph.degree[i] += w;
    graph.degree[j] += w;
  }
  return graph;
}

/// Eigenpairs of a graph Laplacian, eigenvalues ascending. Each eigenvector is
/// signed so that its largest-magnitude entry is positive.
struct Spectrum {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;  // column k pairs with eigenvalues[k]

  std::size_t size() const noexcept { return static_cast<std::size_t>(eigenvalues.size()); }
  double lambda_max() const { return eigenvalues[eigenvalues.size() - 1]; }
};

/// Full decomposition of a dense symmetric matrix (LAPACK divide and conquer).
inline Spectrum eigendecompose(Eigen::MatrixXd symmetric) {
  const auto n = symmetric.rows();
  if (n == 0 || symmetric.cols() != n) throw Error(ErrorKind::ShapeError, "matrix must be square and nonempty");
  Spectrum out;
  out.eigenvalues.resize(n);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', static_cast<lapack_int>(n), symmetric.data(),
                                         static_cast<lapack_int>(n), out.eigenvalues.data());
  if (info != 0) throw Error(ErrorKind::SpectralError, "dsyevd failed with info " + std::to_string(info));
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Index pivot = 0;
    symmetric.col(c).cwiseAbs().maxCoeff(&pivot);
    if (symmetric(pivot, c) < 0.0) symmetric.col(c) *= -1.0;
  }
  out.eigenvectors = std::move(symmetric);
  return out;
}

inline Spectrum eigendecompose(const PatchGraph& graph) { return eigendecompose(graph.laplacian()); }

enum class FourierDirection { Forward, Inverse };

/// Forward: V^T u. Inverse: V u.
inline Eigen::VectorXd graph_fourier(const Spectrum& spectrum, const Eigen::VectorXd& signal,
                                     FourierDirection direction) {
  if (static_cast<std::size_t>(signal.size()) != spectrum.size())
    throw Error(ErrorKind::ShapeError, "signal length does not match the graph");
  if (direction == FourierDirection::Forward) return spectrum.eigenvectors.transpose() * signal;
  return spectrum.eigenvectors * signal;
}

}  // namespace phm
