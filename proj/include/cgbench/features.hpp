#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cgbench/geometry.hpp"
#include "cgbench/kdtree.hpp"

namespace cgbench {

/// Fixed-length descriptor vector. Length must be uniform within a set.
struct Feature {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

struct Keypoint {
  Point3 position = Point3::Zero();
  int cloud_index = -1;
  double saliency = 0.0;
  std::optional<LRF> lrf;
};

/// One feature match. `similarity` is the normalized-descriptor similarity
/// (1 - ||f̂ - f̂'||/2) and `ratio_score` the Lowe-style
/// 1 - d(nn1)/d(nn2); both live in [0, 1].
struct Correspondence {
  Keypoint source;
  Keypoint target;
  double similarity = 0.0;
  double ratio_score = 0.0;
};

/// Ordered correspondence list, the universal input/output of grouping.
/// Cloud pointers are optional and non-owning; a set loaded from JSON has
/// none, and grouping reads clouds through GroupingContext instead.
struct CorrespondenceSet {
  std::vector<Correspondence> items;
  const PointCloud* source_cloud = nullptr;
  const PointCloud* target_cloud = nullptr;

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
  const Correspondence& operator[](std::size_t i) const { return items[i]; }
};

/// Covariance-saliency keypoint detector. A point's saliency is the smallest
/// eigenvalue of the covariance of its support_radius neighborhood; a point
/// survives non-maximum suppression iff its saliency beats every other
/// eligible point within nms_radius (ties go to the lower point index).
/// Points with no neighbors in support are skipped. Output is sorted by
/// descending saliency (ties by index).
std::vector<Keypoint> detect_keypoints(const PointCloud& cloud,
                                       const NeighborIndex& index,
                                       double nms_radius,
                                       double support_radius);

/// Rotation-invariant reference descriptor: an 8-bin histogram of neighbor
/// distances normalized by support_radius concatenated with an 8-bin
/// histogram of |cos| angles between neighbor displacements and the LRF
/// z-axis; each half normalized to sum 1. Uses kp.lrf when present, else
/// computes one from the support. Throws "empty support" with no neighbors.
Feature describe(const PointCloud& cloud, const NeighborIndex& index,
                 const Keypoint& kp, double support_radius);

/// Synthetic descriptor for controlled-inlier-ratio fixtures: a
/// deterministic pseudo-random unit vector keyed by the ground-truth-mapped
/// position quantized to a lattice. With probability corrupt_prob (decided
/// from the mapped cell, so matched pairs corrupt jointly) the key is
/// replaced by one derived from the raw position, breaking the match.
/// Gaussian feature noise of scale noise_sigma is added, then the vector is
/// re-normalized. dim must be >= 3.
Feature oracle_describe(const Keypoint& kp, const RigidTransform& gt,
                        double corrupt_prob, double noise_sigma, int dim,
                        std::uint64_t seed);

struct MatchOptions {
  /// Keep only mutual nearest neighbors (sensitivity-study flag; the default
  /// pipeline keeps one match per source keypoint).
  bool mutual = false;
};

/// L2 matching of each source feature against the target set. Emits one
/// correspondence per source keypoint (ordered by source index) with the
/// nearest target; requires >= 2 target features for the ratio score.
CorrespondenceSet match_features(const std::vector<Feature>& source_features,
                                 const std::vector<Feature>& target_features,
                                 const std::vector<Keypoint>& source_keypoints,
                                 const std::vector<Keypoint>& target_keypoints,
                                 const MatchOptions& options = {});

}  // namespace cgbench
