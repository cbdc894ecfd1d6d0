#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "cgbench/geometry.hpp"

namespace cgbench {

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;
};

/// Exact kd-tree over a fixed point list. Results are required to match a
/// brute-force linear scan exactly, including tie handling: k-NN results are
/// ordered by (distance, index), radius results by index, and ties at the
/// k-th distance resolve toward the lower index. Read-only after
/// construction and safe for concurrent queries.
class NeighborIndex {
 public:
  NeighborIndex() = default;
  explicit NeighborIndex(std::span<const Point3> points);
  explicit NeighborIndex(const PointCloud& cloud);

  std::size_t size() const { return points_.size(); }
  const Point3& point(std::size_t i) const { return points_[i]; }

  /// k nearest points to `query` (k clamped to size), sorted by
  /// (distance, index) ascending.
  std::vector<Neighbor> knn(const Point3& query, std::size_t k) const;

  /// All points with distance <= radius, sorted by index ascending.
  std::vector<Neighbor> radius(const Point3& query, double r) const;

  /// Index and distance of the single nearest point; size() must be > 0.
  Neighbor nearest(const Point3& query) const;

 private:
  struct Node {
    int left = -1;
    int right = -1;
    int axis = -1;       // -1 marks a leaf
    double split = 0.0;  // splitting coordinate
    std::uint32_t begin = 0;
    std::uint32_t end = 0;  // leaf payload range in order_
  };

  int build(std::uint32_t begin, std::uint32_t end);

  std::vector<Point3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  int root_ = -1;

  static constexpr std::uint32_t kLeafSize = 16;

  struct KnnState;
  void knn_visit(int node, const Point3& q, KnnState& state) const;
  void radius_visit(int node, const Point3& q, double r2,
                    std::vector<Neighbor>& out) const;
};

}  // namespace cgbench
