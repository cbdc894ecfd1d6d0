#pragma once

#include <vector>

#include "cgbench/features.hpp"
#include "cgbench/geometry.hpp"
#include "cgbench/groupers.hpp"
#include "cgbench/rng.hpp"
#include "cgbench/synthdata.hpp"

namespace cgbench::testing {

inline Correspondence make_corr(const Point3& src, const Point3& dst,
                                double sim = 1.0, double ratio = 1.0,
                                int src_idx = -1, int dst_idx = -1) {
  Correspondence c;
  c.source.position = src;
  c.target.position = dst;
  c.source.cloud_index = src_idx;
  c.target.cloud_index = dst_idx;
  c.similarity = sim;
  c.ratio_score = ratio;
  return c;
}

/// Mutually consistent correspondences sampled from one rigid motion, with
/// unique keypoint indices and perfect scores.
inline CorrespondenceSet make_exact_inlier_set(int n, const RigidTransform& t,
                                               Rng& rng, double extent = 1.0) {
  CorrespondenceSet set;
  for (int i = 0; i < n; ++i) {
    const Point3 p(rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                   rng.uniform(-extent, extent));
    set.items.push_back(make_corr(p, t.apply(p), 1.0, 1.0, i, i));
  }
  return set;
}

/// Planted-cluster fixture for the spectral grouper: `cluster_size`
/// rigid-consistent correspondences plus `n_outliers` whose rigidity ratio
/// against *every* other correspondence sits near 1/3, far below t_st.
/// Outlier sources sit on one ray at geometrically growing radii and their
/// targets on another ray at 3x those radii, so all baselines involving an
/// outlier disagree by a factor ~3 between the two clouds. The connected
/// component of the thresholded compatibility graph is therefore exactly the
/// planted cluster.
struct PlantedCluster {
  CorrespondenceSet set;
  std::vector<std::size_t> cluster;  // indices of planted members, sorted
};

inline PlantedCluster make_st_planted(int cluster_size, int n_outliers,
                                      std::uint64_t seed) {
  Rng rng(seed);
  const RigidTransform t = random_rigid_transform(rng, 0.5);

  std::vector<Correspondence> items;
  for (int i = 0; i < cluster_size; ++i) {
    const Point3 p = rng.unit_vector() * rng.uniform(0.2, 1.0);
    items.push_back(make_corr(p, t.apply(p)));
  }

  const Eigen::Vector3d src_ray = rng.unit_vector();
  const Eigen::Vector3d dst_ray = rng.unit_vector();
  double radius = 40.0;
  for (int k = 0; k < n_outliers; ++k) {
    radius *= rng.uniform(1.05, 1.15);
    const Point3 src = src_ray * radius + 0.01 * radius * rng.unit_vector();
    const Point3 dst =
        dst_ray * (3.0 * radius) + 0.01 * radius * rng.unit_vector();
    items.push_back(make_corr(src, dst));
  }

  // Shuffle so cluster membership is not index-correlated.
  std::vector<std::size_t> perm(items.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  for (std::size_t i = 0; i + 1 < perm.size(); ++i)
    std::swap(perm[i], perm[i + rng.below(perm.size() - i)]);

  PlantedCluster out;
  for (std::size_t k = 0; k < perm.size(); ++k) {
    Correspondence c = items[perm[k]];
    c.source.cloud_index = static_cast<int>(k);
    c.target.cloud_index = static_cast<int>(k);
    if (perm[k] < static_cast<std::size_t>(cluster_size)) out.cluster.push_back(k);
    out.set.items.push_back(std::move(c));
  }
  std::sort(out.cluster.begin(), out.cluster.end());
  return out;
}

/// Connected component of the t_st-thresholded compatibility graph that
/// contains `start` (independent oracle for the spectral grouper).
inline std::vector<std::size_t> compatibility_component(
    const CorrespondenceSet& set, double t_st, std::size_t start) {
  const std::size_t n = set.size();
  std::vector<char> visited(n, 0);
  std::vector<std::size_t> stack{start};
  visited[start] = 1;
  std::vector<std::size_t> out;
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    out.push_back(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (visited[j] || j == i) continue;
      if (rigidity_ratio(set[i], set[j]) >= t_st) {
        visited[j] = 1;
        stack.push_back(j);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Quaternion route for rotation angles, the oracle against the trace
/// formula.
inline double quaternion_angle_deg(const Eigen::Matrix3d& rotation) {
  const Eigen::Quaterniond q(rotation);
  const double angle =
      2.0 * std::atan2(q.vec().norm(), std::abs(q.w())) * 180.0 / M_PI;
  return angle;
}

}  // namespace cgbench::testing
