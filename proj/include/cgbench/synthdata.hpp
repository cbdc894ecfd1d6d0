#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cgbench/features.hpp"
#include "cgbench/geometry.hpp"
#include "cgbench/groupers.hpp"

namespace cgbench {

struct PairMeta {
  std::string nuisance = "none";
  double level = 0.0;
  std::uint64_t seed = 0;
};

struct SyntheticPair {
  PointCloud source;
  PointCloud target;
  RigidTransform gt;
  std::optional<std::vector<bool>> labels;
  PairMeta meta;
};

/// Adds i.i.d. zero-mean Gaussian offsets of standard deviation
/// sigma_pr × resolution to each coordinate. sigma_pr = 0 returns an
/// identical cloud.
PointCloud add_gaussian_noise(const PointCloud& cloud, double sigma_pr,
                              std::uint64_t seed);

/// Keeps ceil(keep_ratio · n) points sampled without replacement, original
/// order preserved; normals carried along.
PointCloud downsample_random(const PointCloud& cloud, double keep_ratio,
                             std::uint64_t seed);

/// Fraction of `a` points whose gt-mapped position has a neighbor in `b`
/// within eps, over min(|a|, |b|), clamped to [0, 1].
double compute_overlap(const PointCloud& a, const PointCloud& b,
                       const RigidTransform& gt, double eps);

/// Cuts two half-space views of `cloud` along a seeded random direction,
/// solving the plane offsets by bisection until compute_overlap(view1,
/// view2, T, 5 pr) lands within ±0.05 of target_overlap; view2 is rigidly
/// moved by T and gt = T. Throws "unreachable overlap" when the target
/// cannot be bracketed.
SyntheticPair make_partial_pair(const PointCloud& cloud, double target_overlap,
                                const RigidTransform& transform,
                                std::uint64_t seed);

struct ClutterOcclusion {
  double clutter = 0.0;
  double occlusion = 0.0;
};

/// Point-count approximation of the surface-area ratios:
/// clutter = 1 - in_scene/|scene|, occlusion = 1 - in_scene/model_total.
ClutterOcclusion clutter_occlusion_metrics(const PointCloud& scene,
                                           int model_in_scene_count,
                                           int model_total_count);

/// Model occluded by a half-space cut, placed into a scene padded with
/// uniform clutter points until the requested clutter fraction is reached.
/// Bookkeeping counts feed clutter_occlusion_metrics exactly.
struct ClutterScene {
  SyntheticPair pair;  // source = full model, target = composed scene
  int model_in_scene_count = 0;
  int model_total_count = 0;
};
ClutterScene compose_clutter_scene(const PointCloud& model, double clutter,
                                   double occlusion,
                                   const RigidTransform& transform,
                                   std::uint64_t seed);

/// Score distributions attached to fabricated correspondences (clamped to
/// [0, 1]).
struct ScoreModel {
  double sim_inlier_mean = 0.80, sim_inlier_sd = 0.10;
  double sim_outlier_mean = 0.45, sim_outlier_sd = 0.15;
  double ratio_inlier_mean = 0.85, ratio_inlier_sd = 0.08;
  double ratio_outlier_mean = 0.50, ratio_outlier_sd = 0.18;
};

/// Output of synth_correspondences. The fabricated keypoint clouds are owned
/// here; context() wires a GroupingContext over them. `pr` is the scene
/// resolution used for all pr-relative scales (extent/100, a dense-scan
/// stand-in; the sparse keypoint clouds themselves would give a meaningless
/// unit).
struct SynthCorrData {
  PointCloud source;
  PointCloud target;
  CorrespondenceSet set;
  std::vector<bool> labels;
  double pr = 0.0;
  RigidTransform gt;
  std::unordered_map<int, LRF> source_lrfs;
  std::unordered_map<int, LRF> target_lrfs;

  GroupingContext context() const;
};

/// Fabricates n correspondences with exactly floor(n · inlier_ratio)
/// inliers. Inlier targets are gt-mapped sources plus per-axis Gaussian
/// noise of pos_sigma_pr · pr (rejection keeps them within the 5 pr inlier
/// test); outlier pairs are independent uniforms rejected if they
/// accidentally pass it, so `labels` agree exactly with ground-truth
/// labeling at eps = 5 pr. Inliers get gt-consistent LRFs perturbed by
/// lrf_jitter_deg; outliers get independent random frames. Item order is
/// seeded-shuffled so tie-breaking rules cannot correlate with labels.
SynthCorrData synth_correspondences(int n, double inlier_ratio,
                                    const RigidTransform& gt,
                                    double pos_sigma_pr, double extent,
                                    std::uint64_t seed,
                                    const ScoreModel& scores = {},
                                    double lrf_jitter_deg = 0.0);

/// Synthetic scene resolution used by synth_correspondences.
inline double synth_resolution(double extent) { return extent / 100.0; }

/// Bumpy-sphere test shape: unit sphere with a few seeded sinusoidal bumps,
/// n points, deterministic. Gives the detector curvature to latch onto.
PointCloud make_shape_cloud(int n, std::uint64_t seed);

class Rng;
/// Uniform random rotation plus a translation uniform in
/// [-translation_scale, translation_scale]^3.
RigidTransform random_rigid_transform(Rng& rng, double translation_scale);

/// Applies a rigid transform to every point (and rotates normals).
PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& t);

}  // namespace cgbench
