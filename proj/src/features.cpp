#include "cgbench/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "cgbench/rng.hpp"

namespace cgbench {

std::vector<Keypoint> detect_keypoints(const PointCloud& cloud,
                                       const NeighborIndex& index,
                                       double nms_radius,
                                       double support_radius) {
  if (cloud.size() == 0)
    throw std::invalid_argument("detect_keypoints: empty cloud");
  if (nms_radius <= 0.0 || support_radius <= 0.0)
    throw std::invalid_argument("detect_keypoints: radii must be positive");

  const std::size_t n = cloud.size();
  std::vector<double> saliency(n, 0.0);
  std::vector<char> eligible(n, 0);

  for (std::size_t i = 0; i < n; ++i) {
    const auto nbrs = index.radius(cloud.points[i], support_radius);
    // The query point itself is always returned; a point needs at least one
    // *other* neighbor to carry a saliency.
    if (nbrs.size() < 2) continue;
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& nb : nbrs) mean += cloud.points[nb.index];
    mean /= static_cast<double>(nbrs.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& nb : nbrs) {
      const Eigen::Vector3d d = cloud.points[nb.index] - mean;
      cov += d * d.transpose();
    }
    cov /= static_cast<double>(nbrs.size());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    saliency[i] = eig.eigenvalues()(0);
    eligible[i] = 1;
  }

  std::vector<Keypoint> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!eligible[i]) continue;
    bool is_max = true;
    for (const auto& nb : index.radius(cloud.points[i], nms_radius)) {
      const std::size_t j = nb.index;
      if (j == i || !eligible[j]) continue;
      if (saliency[j] > saliency[i] || (saliency[j] == saliency[i] && j < i)) {
        is_max = false;
        break;
      }
    }
    if (!is_max) continue;
    Keypoint kp;
    kp.position = cloud.points[i];
    kp.cloud_index = static_cast<int>(i);
    kp.saliency = saliency[i];
    out.push_back(std::move(kp));
  }

  std::sort(out.begin(), out.end(), [](const Keypoint& a, const Keypoint& b) {
    if (a.saliency != b.saliency) return a.saliency > b.saliency;
    return a.cloud_index < b.cloud_index;
  });
  return out;
}

Feature describe(const PointCloud& cloud, const NeighborIndex& index,
                 const Keypoint& kp, double support_radius) {
  if (support_radius <= 0.0)
    throw std::invalid_argument("describe: support radius must be positive");

  auto nbrs = index.radius(kp.position, support_radius);
  std::erase_if(nbrs, [&](const Neighbor& nb) {
    return static_cast<int>(nb.index) == kp.cloud_index;
  });
  if (nbrs.empty()) throw std::runtime_error("empty support");

  Eigen::Vector3d z_axis(0, 0, 1);
  if (kp.lrf) {
    z_axis = kp.lrf->axes.row(2);
  } else {
    // Degenerate supports (< 3 neighbors) fall back to the global z-axis;
    // such patches carry no orientation signal anyway.
    try {
      z_axis = compute_lrf(cloud, index, kp.position, support_radius).axes.row(2);
    } catch (const std::runtime_error&) {
    }
  }

  constexpr int kBins = 8;
  Feature feature;
  feature.values.assign(2 * kBins, 0.0);
  double dist_total = 0.0;
  double angle_total = 0.0;
  for (const auto& nb : nbrs) {
    const int dbin = std::min(
        kBins - 1, static_cast<int>(nb.distance / support_radius * kBins));
    feature.values[dbin] += 1.0;
    dist_total += 1.0;
    if (nb.distance > 0.0) {
      const Eigen::Vector3d disp = cloud.points[nb.index] - kp.position;
      const double c = std::abs(disp.dot(z_axis)) / nb.distance;
      const int abin = std::min(kBins - 1, static_cast<int>(c * kBins));
      feature.values[kBins + abin] += 1.0;
      angle_total += 1.0;
    }
  }
  if (dist_total > 0.0)
    for (int b = 0; b < kBins; ++b) feature.values[b] /= dist_total;
  if (angle_total > 0.0)
    for (int b = 0; b < kBins; ++b) feature.values[kBins + b] /= angle_total;
  return feature;
}

namespace {

// Unit vector drawn from a key; the stream is independent per (key, seed).
Feature keyed_unit_vector(std::uint64_t key, std::uint64_t seed, int dim) {
  Rng rng(mix64(key, seed));
  Feature f;
  f.values.resize(dim);
  double norm2 = 0.0;
  for (int i = 0; i < dim; ++i) {
    f.values[i] = rng.normal();
    norm2 += f.values[i] * f.values[i];
  }
  const double norm = std::sqrt(norm2);
  if (norm > 1e-300)
    for (auto& v : f.values) v /= norm;
  else
    f.values[0] = 1.0;
  return f;
}

std::uint64_t lattice_key(const Point3& p, double pitch) {
  const auto cell = [&](double v) {
    return static_cast<std::uint64_t>(
        static_cast<std::int64_t>(std::floor(v / pitch)));
  };
  std::uint64_t h = 0x6b79706f696e7432ull;
  h = mix64(h, cell(p.x()));
  h = mix64(h, cell(p.y()));
  h = mix64(h, cell(p.z()));
  return h;
}

}  // namespace

Feature oracle_describe(const Keypoint& kp, const RigidTransform& gt,
                        double corrupt_prob, double noise_sigma, int dim,
                        std::uint64_t seed) {
  if (dim < 3) throw std::invalid_argument("oracle_describe: dim must be >= 3");

  // Pitch absorbs floating-point drift of the gt mapping; real positional
  // noise is supposed to corrupt keys, like a real descriptor would.
  constexpr double kPitch = 1e-6;
  const Point3 mapped = gt.apply(kp.position);
  const std::uint64_t mapped_key = lattice_key(mapped, kPitch);

  // The corruption decision is keyed on the mapped cell so both ends of a
  // true match corrupt together: match preservation rate is exactly
  // 1 - corrupt_prob. The replacement key comes from the raw position, so
  // corrupted partners diverge.
  std::uint64_t key = mapped_key;
  if (corrupt_prob > 0.0) {
    Rng decider(mix64(mapped_key, mix64(seed, 0x636f7272ull)));
    if (decider.uniform() < corrupt_prob)
      key = mix64(lattice_key(kp.position, kPitch), 0x7261776bull);
  }

  Feature f = keyed_unit_vector(key, seed, dim);
  if (noise_sigma > 0.0) {
    Rng noise(mix64(lattice_key(kp.position, kPitch), mix64(seed, 0x6e6f6973ull)));
    double norm2 = 0.0;
    for (auto& v : f.values) {
      v += noise_sigma * noise.normal();
      norm2 += v * v;
    }
    const double norm = std::sqrt(norm2);
    if (norm > 1e-300)
      for (auto& v : f.values) v /= norm;
  }
  return f;
}

CorrespondenceSet match_features(const std::vector<Feature>& source_features,
                                 const std::vector<Feature>& target_features,
                                 const std::vector<Keypoint>& source_keypoints,
                                 const std::vector<Keypoint>& target_keypoints,
                                 const MatchOptions& options) {
  if (source_features.empty())
    throw std::invalid_argument("match_features: empty source feature list");
  if (target_features.size() < 2)
    throw std::invalid_argument("match_features: need >= 2 target features");
  if (source_features.size() != source_keypoints.size() ||
      target_features.size() != target_keypoints.size())
    throw std::invalid_argument("match_features: feature/keypoint size mismatch");
  const std::size_t dim = source_features.front().size();
  for (const auto& f : source_features)
    if (f.size() != dim)
      throw std::invalid_argument("match_features: inconsistent dimensions");
  for (const auto& f : target_features)
    if (f.size() != dim)
      throw std::invalid_argument("match_features: inconsistent dimensions");

  auto l2 = [dim](const Feature& a, const Feature& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double d = a.values[i] - b.values[i];
      s += d * d;
    }
    return std::sqrt(s);
  };
  auto normalized = [dim](const Feature& f) {
    Feature out = f;
    double n = 0.0;
    for (double v : out.values) n += v * v;
    n = std::sqrt(n);
    if (n > 1e-300)
      for (auto& v : out.values) v /= n;
    return out;
  };

  std::vector<Feature> target_unit;
  target_unit.reserve(target_features.size());
  for (const auto& f : target_features) target_unit.push_back(normalized(f));

  struct Match {
    std::size_t nn1 = 0;
    double d1 = 0.0, d2 = 0.0;
  };
  std::vector<Match> matches(source_features.size());
  for (std::size_t i = 0; i < source_features.size(); ++i) {
    double d1 = std::numeric_limits<double>::infinity();
    double d2 = std::numeric_limits<double>::infinity();
    std::size_t nn1 = 0;
    for (std::size_t j = 0; j < target_features.size(); ++j) {
      const double d = l2(source_features[i], target_features[j]);
      if (d < d1) {
        d2 = d1;
        d1 = d;
        nn1 = j;
      } else if (d < d2) {
        d2 = d;
      }
    }
    matches[i] = Match{nn1, d1, d2};
  }

  std::vector<std::size_t> target_best;
  if (options.mutual) {
    target_best.assign(target_features.size(),
                       std::numeric_limits<std::size_t>::max());
    std::vector<double> best_d(target_features.size(),
                               std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < source_features.size(); ++i) {
      const auto& m = matches[i];
      if (m.d1 < best_d[m.nn1]) {
        best_d[m.nn1] = m.d1;
        target_best[m.nn1] = i;
      }
    }
  }

  CorrespondenceSet set;
  set.items.reserve(source_features.size());
  for (std::size_t i = 0; i < source_features.size(); ++i) {
    const auto& m = matches[i];
    if (options.mutual && target_best[m.nn1] != i) continue;
    Correspondence c;
    c.source = source_keypoints[i];
    c.target = target_keypoints[m.nn1];
    const Feature src_unit = normalized(source_features[i]);
    c.similarity =
        std::clamp(1.0 - l2(src_unit, target_unit[m.nn1]) / 2.0, 0.0, 1.0);
    c.ratio_score = m.d2 > 0.0 ? std::clamp(1.0 - m.d1 / m.d2, 0.0, 1.0) : 0.0;
    set.items.push_back(std::move(c));
  }
  return set;
}

}  // namespace cgbench
