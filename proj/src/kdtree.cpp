#include "cgbench/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cgbench {

NeighborIndex::NeighborIndex(std::span<const Point3> points)
    : points_(points.begin(), points.end()) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    root_ = build(0, static_cast<std::uint32_t>(points_.size()));
  }
}

NeighborIndex::NeighborIndex(const PointCloud& cloud)
    : NeighborIndex(std::span<const Point3>(cloud.points)) {}

int NeighborIndex::build(std::uint32_t begin, std::uint32_t end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.emplace_back();

  if (end - begin <= kLeafSize) {
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }

  // Split the widest axis at the median; ties in the sort key fall back to
  // the point index so the tree layout is deterministic.
  Eigen::Vector3d lo = points_[order_[begin]];
  Eigen::Vector3d hi = lo;
  for (std::uint32_t i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid,
                   order_.begin() + end, [&](std::uint32_t a, std::uint32_t b) {
                     const double ca = points_[a][axis];
                     const double cb = points_[b][axis];
                     if (ca != cb) return ca < cb;
                     return a < b;
                   });

  const double split = points_[order_[mid]][axis];
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

namespace {

struct Candidate {
  double dist2;
  std::size_t index;
};

// Strict ordering matching a (distance, index) sorted linear scan: ties at
// equal distance resolve toward the lower index.
inline bool better(const Candidate& a, const Candidate& b) {
  if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
  return a.index < b.index;
}

}  // namespace

struct NeighborIndex::KnnState {
  std::size_t k = 0;
  std::vector<Candidate> heap;  // max-heap under better(): front is the worst

  double worst_dist2() const {
    return heap.size() < k ? std::numeric_limits<double>::infinity()
                           : heap.front().dist2;
  }

  void offer(double dist2, std::size_t index) {
    Candidate c{dist2, index};
    if (heap.size() < k) {
      heap.push_back(c);
      std::push_heap(heap.begin(), heap.end(), better);
    } else if (better(c, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), better);
      heap.back() = c;
      std::push_heap(heap.begin(), heap.end(), better);
    }
  }
};

void NeighborIndex::knn_visit(int node_id, const Point3& q, KnnState& state) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::size_t idx = order_[i];
      state.offer((points_[idx] - q).squaredNorm(), idx);
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const int near = diff < 0.0 ? node.left : node.right;
  const int far = diff < 0.0 ? node.right : node.left;
  knn_visit(near, q, state);
  // Visit the far side on equality too: an equidistant point with a lower
  // index can still displace the current worst.
  if (diff * diff <= state.worst_dist2()) knn_visit(far, q, state);
}

std::vector<Neighbor> NeighborIndex::knn(const Point3& query, std::size_t k) const {
  k = std::min(k, points_.size());
  std::vector<Neighbor> out;
  if (k == 0) return out;
  KnnState state;
  state.k = k;
  state.heap.reserve(k + 1);
  knn_visit(root_, query, state);
  std::sort(state.heap.begin(), state.heap.end(), better);
  out.reserve(state.heap.size());
  for (const auto& c : state.heap)
    out.push_back(Neighbor{c.index, std::sqrt(c.dist2)});
  return out;
}

void NeighborIndex::radius_visit(int node_id, const Point3& q, double r2,
                                 std::vector<Neighbor>& out) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::size_t idx = order_[i];
      const double d2 = (points_[idx] - q).squaredNorm();
      if (d2 <= r2) out.push_back(Neighbor{idx, std::sqrt(d2)});
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const int near = diff < 0.0 ? node.left : node.right;
  const int far = diff < 0.0 ? node.right : node.left;
  radius_visit(near, q, r2, out);
  if (diff * diff <= r2) radius_visit(far, q, r2, out);
}

std::vector<Neighbor> NeighborIndex::radius(const Point3& query, double r) const {
  std::vector<Neighbor> out;
  if (points_.empty() || r < 0.0) return out;
  radius_visit(root_, query, r * r, out);
  std::sort(out.begin(), out.end(),
            [](const Neighbor& a, const Neighbor& b) { return a.index < b.index; });
  return out;
}

Neighbor NeighborIndex::nearest(const Point3& query) const {
  return knn(query, 1).front();
}

}  // namespace cgbench
