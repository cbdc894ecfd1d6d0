#include "cgbench/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Geometry>

#include "cgbench/kdtree.hpp"
#include "cgbench/rng.hpp"

namespace cgbench {

namespace {

Eigen::Matrix3d axis_angle(const Eigen::Vector3d& axis, double angle_rad) {
  return Eigen::AngleAxisd(angle_rad, axis).toRotationMatrix();
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

PointCloud add_gaussian_noise(const PointCloud& cloud, double sigma_pr,
                              std::uint64_t seed) {
  if (cloud.size() == 0)
    throw std::invalid_argument("add_gaussian_noise: empty cloud");
  if (sigma_pr < 0.0)
    throw std::invalid_argument("add_gaussian_noise: sigma must be >= 0");

  PointCloud out;
  out.normals = cloud.normals;
  out.points.reserve(cloud.size());
  if (sigma_pr == 0.0) {
    out.points = cloud.points;
    return out;
  }
  const double sigma = sigma_pr * cloud.resolution();
  Rng rng(seed);
  for (const auto& p : cloud.points)
    out.points.emplace_back(p.x() + sigma * rng.normal(),
                            p.y() + sigma * rng.normal(),
                            p.z() + sigma * rng.normal());
  return out;
}

PointCloud downsample_random(const PointCloud& cloud, double keep_ratio,
                             std::uint64_t seed) {
  if (keep_ratio <= 0.0 || keep_ratio > 1.0)
    throw std::invalid_argument("downsample_random: keep_ratio must be in (0,1]");
  const std::size_t n = cloud.size();
  const auto m = static_cast<std::size_t>(
      std::ceil(keep_ratio * static_cast<double>(n)));
  if (m < 2) throw std::runtime_error("downsample_random: result < 2 points");

  // Partial Fisher-Yates, then restore original order.
  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  Rng rng(seed);
  for (std::size_t i = 0; i < m; ++i)
    std::swap(idx[i], idx[i + rng.below(n - i)]);
  idx.resize(m);
  std::sort(idx.begin(), idx.end());

  PointCloud out;
  out.points.reserve(m);
  if (cloud.has_normals()) out.normals.reserve(m);
  for (auto i : idx) {
    out.points.push_back(cloud.points[i]);
    if (cloud.has_normals()) out.normals.push_back(cloud.normals[i]);
  }
  return out;
}

double compute_overlap(const PointCloud& a, const PointCloud& b,
                       const RigidTransform& gt, double eps) {
  if (a.size() == 0 || b.size() == 0)
    throw std::invalid_argument("compute_overlap: empty cloud");
  NeighborIndex index(b);
  std::size_t count = 0;
  for (const auto& p : a.points)
    if (index.nearest(gt.apply(p)).distance <= eps) ++count;
  const double denom = static_cast<double>(std::min(a.size(), b.size()));
  return std::min(1.0, static_cast<double>(count) / denom);
}

SyntheticPair make_partial_pair(const PointCloud& cloud, double target_overlap,
                                const RigidTransform& transform,
                                std::uint64_t seed) {
  if (cloud.size() < 100)
    throw std::invalid_argument("make_partial_pair: need >= 100 points");
  if (target_overlap <= 0.0 || target_overlap > 1.0)
    throw std::invalid_argument("make_partial_pair: overlap must be in (0,1]");

  const double eps = 5.0 * cloud.resolution();
  Rng rng(seed);
  const Eigen::Vector3d direction = rng.unit_vector();

  std::vector<double> s(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    s[i] = direction.dot(cloud.points[i]);
  const auto [lo_it, hi_it] = std::minmax_element(s.begin(), s.end());
  const double mid = (*lo_it + *hi_it) / 2.0;
  const double half_range = (*hi_it - *lo_it) / 2.0;

  auto cut = [&](double w, PointCloud& view1, PointCloud& view2) {
    view1 = PointCloud{};
    view2 = PointCloud{};
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (s[i] <= mid + w) {
        view1.points.push_back(cloud.points[i]);
        if (cloud.has_normals()) view1.normals.push_back(cloud.normals[i]);
      }
      if (s[i] >= mid - w) {
        view2.points.push_back(cloud.points[i]);
        if (cloud.has_normals()) view2.normals.push_back(cloud.normals[i]);
      }
    }
  };

  constexpr double kTolerance = 0.05;
  auto overlap_at = [&](double w, SyntheticPair& pair) {
    PointCloud view1, view2;
    cut(w, view1, view2);
    pair.source = std::move(view1);
    pair.target = apply_transform(view2, transform);
    pair.gt = transform;
    if (pair.source.size() == 0 || pair.target.size() == 0) return -1.0;
    return compute_overlap(pair.source, pair.target, transform, eps);
  };

  SyntheticPair pair;
  pair.meta = PairMeta{"overlap", target_overlap, seed};

  double lo = 0.0, hi = half_range;
  double f_lo = overlap_at(lo, pair);
  if (std::abs(f_lo - target_overlap) <= kTolerance) return pair;
  double f_hi = overlap_at(hi, pair);
  if (std::abs(f_hi - target_overlap) <= kTolerance) return pair;
  if (f_lo > target_overlap || f_hi < target_overlap)
    throw std::runtime_error("unreachable overlap");

  for (int iter = 0; iter < 60; ++iter) {
    const double w = (lo + hi) / 2.0;
    const double f = overlap_at(w, pair);
    if (std::abs(f - target_overlap) <= kTolerance) return pair;
    if (f < target_overlap)
      lo = w;
    else
      hi = w;
  }
  throw std::runtime_error("unreachable overlap");
}

ClutterOcclusion clutter_occlusion_metrics(const PointCloud& scene,
                                           int model_in_scene_count,
                                           int model_total_count) {
  if (scene.size() == 0 || model_total_count == 0)
    throw std::invalid_argument("clutter_occlusion_metrics: zero denominator");
  if (model_in_scene_count <= 0 || model_total_count < 0)
    throw std::invalid_argument("clutter_occlusion_metrics: counts must be positive");
  if (model_in_scene_count > static_cast<int>(scene.size()) ||
      model_in_scene_count > model_total_count)
    throw std::invalid_argument(
        "clutter_occlusion_metrics: in-scene count exceeds a total");
  ClutterOcclusion out;
  out.clutter = 1.0 - static_cast<double>(model_in_scene_count) /
                          static_cast<double>(scene.size());
  out.occlusion = 1.0 - static_cast<double>(model_in_scene_count) /
                            static_cast<double>(model_total_count);
  return out;
}

ClutterScene compose_clutter_scene(const PointCloud& model, double clutter,
                                   double occlusion,
                                   const RigidTransform& transform,
                                   std::uint64_t seed) {
  if (model.size() < 10)
    throw std::invalid_argument("compose_clutter_scene: model too small");
  if (clutter < 0.0 || clutter >= 1.0 || occlusion < 0.0 || occlusion >= 1.0)
    throw std::invalid_argument(
        "compose_clutter_scene: fractions must be in [0,1)");

  Rng rng(seed);
  const Eigen::Vector3d direction = rng.unit_vector();

  // Occlusion: keep the (1 - occlusion) fraction on one side of a plane.
  std::vector<std::size_t> order(model.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double sa = direction.dot(model.points[a]);
    const double sb = direction.dot(model.points[b]);
    if (sa != sb) return sa < sb;
    return a < b;
  });
  const auto keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::llround((1.0 - occlusion) * double(model.size()))));
  order.resize(std::min(keep, order.size()));
  std::sort(order.begin(), order.end());

  PointCloud visible;
  for (auto i : order) visible.points.push_back(model.points[i]);

  ClutterScene out;
  out.model_total_count = static_cast<int>(model.size());
  out.model_in_scene_count = static_cast<int>(visible.size());

  // Clutter: pad with uniform points until in_scene/|scene| = 1 - clutter.
  const auto scene_total = static_cast<std::size_t>(
      std::llround(double(visible.size()) / (1.0 - clutter)));
  const std::size_t n_clutter = scene_total - visible.size();

  PointCloud scene = apply_transform(visible, transform);
  Eigen::Vector3d lo = scene.points.front(), hi = scene.points.front();
  for (const auto& p : scene.points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Eigen::Vector3d extent = (hi - lo).cwiseMax(1e-9);
  const Eigen::Vector3d box_lo = lo - extent;
  const Eigen::Vector3d box_hi = hi + extent;
  for (std::size_t i = 0; i < n_clutter; ++i)
    scene.points.emplace_back(rng.uniform(box_lo.x(), box_hi.x()),
                              rng.uniform(box_lo.y(), box_hi.y()),
                              rng.uniform(box_lo.z(), box_hi.z()));

  out.pair.source = model;
  out.pair.target = std::move(scene);
  out.pair.gt = transform;
  out.pair.meta = PairMeta{"clutter", clutter, seed};
  return out;
}

GroupingContext SynthCorrData::context() const {
  GroupingContext ctx;
  ctx.source_cloud = &source;
  ctx.target_cloud = &target;
  ctx.pr = pr;
  ctx.source_lrfs = source_lrfs;
  ctx.target_lrfs = target_lrfs;
  return ctx;
}

SynthCorrData synth_correspondences(int n, double inlier_ratio,
                                    const RigidTransform& gt,
                                    double pos_sigma_pr, double extent,
                                    std::uint64_t seed,
                                    const ScoreModel& scores,
                                    double lrf_jitter_deg) {
  if (n < 3) throw std::invalid_argument("synth_correspondences: n must be >= 3");
  if (inlier_ratio < 0.0 || inlier_ratio > 1.0)
    throw std::invalid_argument("synth_correspondences: ratio must be in [0,1]");
  if (extent <= 0.0)
    throw std::invalid_argument("synth_correspondences: extent must be positive");

  SynthCorrData data;
  data.gt = gt;
  data.pr = synth_resolution(extent);
  const double eps = 5.0 * data.pr;
  const double pos_sigma = pos_sigma_pr * data.pr;
  const int n_inliers = static_cast<int>(std::floor(n * inlier_ratio));

  Rng rng(seed);
  const double half = extent / 2.0;
  auto uniform_point = [&]() {
    return Point3(rng.uniform(-half, half), rng.uniform(-half, half),
                  rng.uniform(-half, half));
  };
  // Residual computed exactly as ground-truth labeling does, so the
  // generated labels cannot disagree with it.
  auto residual = [&](const Point3& src, const Point3& dst) {
    return (gt.apply(src) - dst).norm();
  };

  std::vector<Correspondence> items;
  std::vector<bool> labels;
  std::vector<LRF> src_frames, tgt_frames;
  items.reserve(n);

  for (int i = 0; i < n; ++i) {
    const bool inlier = i < n_inliers;
    Correspondence c;
    LRF ls, lt;
    if (inlier) {
      c.source.position = uniform_point();
      do {
        Point3 noise(pos_sigma * rng.normal(), pos_sigma * rng.normal(),
                     pos_sigma * rng.normal());
        c.target.position = gt.apply(c.source.position) + noise;
      } while (residual(c.source.position, c.target.position) > eps);
      c.similarity = clamp01(rng.normal(scores.sim_inlier_mean, scores.sim_inlier_sd));
      c.ratio_score =
          clamp01(rng.normal(scores.ratio_inlier_mean, scores.ratio_inlier_sd));
      ls.axes = rng.rotation();
      lt.axes = ls.axes * gt.rotation.transpose();
      if (lrf_jitter_deg > 0.0) {
        const double angle =
            std::abs(rng.normal()) * lrf_jitter_deg * M_PI / 180.0;
        lt.axes = lt.axes * axis_angle(rng.unit_vector(), angle).transpose();
      }
    } else {
      // Outlier targets live in the gt-mapped extent like inlier targets,
      // just paired with an unrelated source.
      do {
        c.source.position = uniform_point();
        c.target.position = gt.apply(uniform_point());
      } while (residual(c.source.position, c.target.position) <= eps);
      c.similarity =
          clamp01(rng.normal(scores.sim_outlier_mean, scores.sim_outlier_sd));
      c.ratio_score =
          clamp01(rng.normal(scores.ratio_outlier_mean, scores.ratio_outlier_sd));
      ls.axes = rng.rotation();
      lt.axes = rng.rotation();
    }
    items.push_back(std::move(c));
    labels.push_back(inlier);
    src_frames.push_back(ls);
    tgt_frames.push_back(lt);
  }

  // Shuffle so index-based tie-breaking cannot correlate with labels.
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = 0; i + 1 < perm.size(); ++i)
    std::swap(perm[i], perm[i + rng.below(perm.size() - i)]);

  data.set.items.reserve(n);
  data.labels.reserve(n);
  for (int k = 0; k < n; ++k) {
    const std::size_t i = perm[k];
    Correspondence c = items[i];
    c.source.cloud_index = k;
    c.target.cloud_index = k;
    LRF ls = src_frames[i];
    LRF lt = tgt_frames[i];
    ls.origin = c.source.position;
    lt.origin = c.target.position;
    data.source.points.push_back(c.source.position);
    data.target.points.push_back(c.target.position);
    data.source_lrfs.emplace(k, ls);
    data.target_lrfs.emplace(k, lt);
    data.set.items.push_back(std::move(c));
    data.labels.push_back(labels[i]);
  }
  data.set.source_cloud = nullptr;  // wired by context() once `data` rests
  data.set.target_cloud = nullptr;
  return data;
}

PointCloud make_shape_cloud(int n, std::uint64_t seed) {
  if (n < 4) throw std::invalid_argument("make_shape_cloud: n must be >= 4");
  Rng rng(seed);

  struct Bump {
    Eigen::Vector3d direction;
    double amplitude;
    double frequency;
    double phase;
  };
  std::vector<Bump> bumps(6);
  for (auto& b : bumps) {
    b.direction = rng.unit_vector();
    b.amplitude = rng.uniform(0.03, 0.09);
    b.frequency = rng.uniform(2.0, 5.0);
    b.phase = rng.uniform(0.0, 2.0 * M_PI);
  }

  PointCloud cloud;
  cloud.points.reserve(n);
  cloud.normals.reserve(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d u = rng.unit_vector();
    double r = 1.0;
    for (const auto& b : bumps)
      r += b.amplitude * std::sin(b.frequency * b.direction.dot(u) + b.phase);
    cloud.points.push_back(r * u);
    cloud.normals.push_back(u);  // coarse outward normal; fine for fixtures
  }
  return cloud;
}

RigidTransform random_rigid_transform(Rng& rng, double translation_scale) {
  RigidTransform t;
  t.rotation = rng.rotation();
  t.translation = Eigen::Vector3d(
      rng.uniform(-translation_scale, translation_scale),
      rng.uniform(-translation_scale, translation_scale),
      rng.uniform(-translation_scale, translation_scale));
  return t;
}

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& t) {
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back(t.apply(p));
  out.normals.reserve(cloud.normals.size());
  for (const auto& n : cloud.normals) out.normals.push_back(t.rotation * n);
  return out;
}

}  // namespace cgbench
