#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "phm/cloud.hpp"
#include "phm/error.hpp"

namespace phm {

/// Exact k-nearest-neighbor search over a fixed set of 3D points (kd-tree).
///
/// Results are ordered by (squared distance, index), so equidistant points
/// always come back lowest index first. The index is immutable once built and
/// may be queried concurrently.
class SpatialIndex {
 public:
  struct Neighbor {
    std::size_t index;
    double sq_dist;
  };

  explicit SpatialIndex(std::span<const Point3> points) : points_(points.begin(), points.end()) {
    if (points_.empty()) throw Error(ErrorKind::EmptyCloud, "cannot index an empty point set");
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::uint32_t{0});
    nodes_.reserve(2 * points_.size() / kLeafSize + 1);
    build(0, static_cast<std::uint32_t>(points_.size()));
  }

  std::size_t size() const noexcept { return points_.size(); }
  const Point3& point(std::size_t i) const { return points_[i]; }

  /// The min(k, N') closest points, where N' excludes `skip` when it is set.
  std::vector<Neighbor> knn(const Point3& query, std::size_t k,
                            std::optional<std::size_t> skip = std::nullopt) const {
    std::size_t available = points_.size();
    if (skip && *skip < points_.size()) --available;
    k = std::min(k, available);
    std::vector<Neighbor> heap;
    if (k == 0) return heap;
    heap.reserve(k + 1);
    Search search{query, k, skip, heap};
    visit(0, search);
    std::sort_heap(heap.begin(), heap.end(), worse_first);
    return heap;
  }

  /// Closest point to `query`; ties resolve to the lowest index.
  Neighbor nearest(const Point3& query) const { return knn(query, 1).front(); }

 private:
  static constexpr std::uint32_t kLeafSize = 12;

  struct Node {
    std::uint32_t begin;
    std::uint32_t end;
    std::int32_t left = -1;  // -1 marks a leaf
    std::int32_t right = -1;
    int axis = 0;
    double split = 0.0;
  };

  struct Search {
    const Point3& query;
    std::size_t k;
    std::optional<std::size_t> skip;
    std::vector<Neighbor>& heap;
  };

  // Heap comparator: the top of the heap is the current worst candidate.
  static bool worse_first(const Neighbor& a, const Neighbor& b) {
    return a.sq_dist < b.sq_dist || (a.sq_dist == b.sq_dist && a.index < b.index);
  }

  std::int32_t build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(Node{begin, end});
    if (end - begin <= kLeafSize) return id;

    Point3 lo = points_[order_[begin]];
    Point3 hi = lo;
    for (std::uint32_t i = begin + 1; i < end; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi[axis] == lo[axis]) return id;  // all coincident: keep as a leaf

    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
    const double split = points_[order_[mid]][axis];
    const auto left = build(begin, mid);
    const auto right = build(mid, end);
    Node& node = nodes_[static_cast<std::size_t>(id)];
    node.axis = axis;
    node.split = split;
    node.left = left;
    node.right = right;
    return id;
  }

  void offer(Search& s, std::size_t index, double d2) const {
    const Neighbor candidate{index, d2};
    if (s.heap.size() < s.k) {
      s.heap.push_back(candidate);
      std::push_heap(s.heap.begin(), s.heap.end(), worse_first);
    } else if (worse_first(candidate, s.heap.front())) {
      std::pop_heap(s.heap.begin(), s.heap.end(), worse_first);
      s.heap.back() = candidate;
      std::push_heap(s.heap.begin(), s.heap.end(), worse_first);
    }
  }

  void visit(std::int32_t id, Search& s) const {
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const std::size_t index = order_[i];
        if (s.skip && *s.skip == index) continue;
        offer(s, index, (points_[index] - s.query).squaredNorm());
      }
      return;
    }
    const double diff = s.query[node.axis] - node.split;
    const auto near_child = diff < 0 ? node.left : node.right;
    const auto far_child = diff < 0 ? node.right : node.left;
    visit(near_child, s);
    // Equal distance still has to be explored: a lower index may sit across the plane.
    if (s.heap.size() < s.k || diff * diff <= s.heap.front().sq_dist) visit(far_child, s);
  }

  std::vector<Point3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

/// Indices of the k nearest indexed points to `query`, nearest first.
/// With `exclude_self`, an indexed point coinciding with the query (the lowest
/// such index) is not reported.
inline std::vector<std::size_t> knn_indices(const SpatialIndex& index, const Point3& query, std::size_t k,
                                            bool exclude_self) {
  if (k == 0) throw Error(ErrorKind::DomainError, "k must be positive");
  std::optional<std::size_t> skip;
  if (exclude_self) {
    const auto hit = index.nearest(query);
    if (hit.sq_dist == 0.0) skip = hit.index;
  }
  std::vector<std::size_t> out;
  for (const auto& n : index.knn(query, k, skip)) out.push_back(n.index);
  return out;
}

}  // namespace phm
