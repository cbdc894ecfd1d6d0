#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "cgbench/features.hpp"
#include "cgbench/kdtree.hpp"
#include "cgbench/rng.hpp"
#include "cgbench/synthdata.hpp"
#include "helpers.hpp"

using namespace cgbench;

namespace {

PointCloud random_cloud(int n, Rng& rng, double extent = 1.0) {
  PointCloud cloud;
  for (int i = 0; i < n; ++i)
    cloud.points.emplace_back(rng.uniform(-extent, extent),
                              rng.uniform(-extent, extent),
                              rng.uniform(-extent, extent));
  return cloud;
}

Keypoint keypoint_at(const Point3& p, int index = -1) {
  Keypoint kp;
  kp.position = p;
  kp.cloud_index = index;
  return kp;
}

}  // namespace

TEST_CASE("detect_keypoints NMS extremes") {
  Rng rng(31);
  PointCloud cloud = random_cloud(80, rng);
  NeighborIndex index(cloud);

  // Vacuous NMS: radius below every inter-point gap keeps all eligible points.
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cloud.size(); ++i)
    min_gap = std::min(min_gap, index.knn(cloud.points[i], 2)[1].distance);
  const auto all = detect_keypoints(cloud, index, min_gap * 0.5, 1.0);
  CHECK(all.size() == cloud.size());

  // NMS radius beyond the diameter: exactly one survivor.
  const auto one = detect_keypoints(cloud, index, 100.0, 1.0);
  REQUIRE(one.size() == 1);
  // ... and it is the global saliency maximum.
  CHECK(one.front().saliency ==
        std::max_element(all.begin(), all.end(),
                         [](const Keypoint& a, const Keypoint& b) {
                           return a.saliency < b.saliency;
                         })
            ->saliency);

  CHECK_THROWS_AS(detect_keypoints(PointCloud{}, index, 1.0, 1.0),
                  std::invalid_argument);
}

TEST_CASE("doubling the NMS radius never increases the keypoint count") {
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(500 + seed);
    PointCloud cloud = random_cloud(150, rng);
    NeighborIndex index(cloud);
    double radius = 0.05;
    std::size_t previous = std::numeric_limits<std::size_t>::max();
    for (int step = 0; step < 5; ++step, radius *= 2.0) {
      const auto kps = detect_keypoints(cloud, index, radius, 0.6);
      CHECK(kps.size() <= previous);
      previous = kps.size();
    }
  }
}

TEST_CASE("detect_keypoints output is sorted by descending saliency") {
  Rng rng(32);
  PointCloud cloud = random_cloud(120, rng);
  NeighborIndex index(cloud);
  const auto kps = detect_keypoints(cloud, index, 0.1, 0.5);
  for (std::size_t i = 1; i < kps.size(); ++i)
    CHECK(kps[i - 1].saliency >= kps[i].saliency);
}

namespace {

PointCloud shape_patch(Rng& rng, int n = 80) {
  PointCloud patch;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform(-1.0, 1.0);
    const double v = rng.uniform(-1.0, 1.0);
    patch.points.emplace_back(u, 0.6 * v, 0.2 * std::sin(2.5 * u) + 0.1 * v * v);
  }
  return patch;
}

}  // namespace

TEST_CASE("describe: shape, normalization, invariances") {
  Rng rng(41);
  PointCloud patch = shape_patch(rng);
  NeighborIndex index(patch);
  const Keypoint center = keypoint_at(Point3(0, 0, 0));
  const Feature f = describe(patch, index, center, 2.0);

  REQUIRE(f.size() == 16);
  double first_half = 0.0, second_half = 0.0;
  for (int b = 0; b < 8; ++b) {
    CHECK(f.values[b] >= 0.0);
    CHECK(f.values[8 + b] >= 0.0);
    first_half += f.values[b];
    second_half += f.values[8 + b];
  }
  CHECK(first_half == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(second_half == doctest::Approx(1.0).epsilon(1e-9));

  // Translation invariance: identical patch at another location.
  const Point3 offset(5, -3, 11);
  PointCloud moved;
  for (const auto& p : patch.points) moved.points.push_back(p + offset);
  NeighborIndex moved_index(moved);
  const Feature g = describe(moved, moved_index, keypoint_at(offset), 2.0);
  for (std::size_t i = 0; i < f.size(); ++i)
    CHECK(std::abs(f.values[i] - g.values[i]) < 1e-9);

  // Rotation invariance within loose histogram tolerance.
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::Matrix3d r = rng.rotation();
    PointCloud rotated;
    for (const auto& p : patch.points) rotated.points.push_back(r * p);
    NeighborIndex rotated_index(rotated);
    const Feature h = describe(rotated, rotated_index, keypoint_at(Point3(0, 0, 0)), 2.0);
    for (std::size_t i = 0; i < f.size(); ++i)
      CHECK(std::abs(f.values[i] - h.values[i]) < 1e-3);
  }

  PointCloud lonely;
  lonely.points = {Point3(0, 0, 0)};
  NeighborIndex lonely_index(lonely);
  Keypoint self = keypoint_at(Point3(0, 0, 0), 0);
  CHECK_THROWS_WITH_AS(describe(lonely, lonely_index, self, 0.5), "empty support",
                       std::runtime_error);
}

TEST_CASE("oracle_describe key behaviour") {
  Rng rng(55);
  RigidTransform gt = random_rigid_transform(rng, 1.0);

  SUBCASE("exact pairs produce identical features") {
    for (int i = 0; i < 20; ++i) {
      const Point3 p(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      const Feature a = oracle_describe(keypoint_at(p), gt, 0.0, 0.0, 16, 7);
      const Feature b =
          oracle_describe(keypoint_at(gt.apply(p)), RigidTransform{}, 0.0, 0.0, 16, 7);
      CHECK(a.values == b.values);
    }
  }

  SUBCASE("corrupt_prob=1 breaks every mapped match") {
    int matches = 0;
    for (int i = 0; i < 200; ++i) {
      const Point3 p(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      const Feature a = oracle_describe(keypoint_at(p), gt, 1.0, 0.0, 16, 7);
      const Feature b =
          oracle_describe(keypoint_at(gt.apply(p)), RigidTransform{}, 1.0, 0.0, 16, 7);
      if (a.values == b.values) ++matches;
    }
    CHECK(matches == 0);
  }

  SUBCASE("corrupt_prob=0.5 preserves about half the keys") {
    int preserved = 0;
    const int trials = 1000;
    for (int i = 0; i < trials; ++i) {
      const Point3 p(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      const Feature a = oracle_describe(keypoint_at(p), gt, 0.5, 0.0, 16, 7);
      const Feature b =
          oracle_describe(keypoint_at(gt.apply(p)), RigidTransform{}, 0.5, 0.0, 16, 7);
      if (a.values == b.values) ++preserved;
    }
    CHECK(preserved >= 450);
    CHECK(preserved <= 550);
  }

  SUBCASE("unit norm with and without feature noise") {
    const Point3 p(0.3, 0.4, 0.5);
    for (double sigma : {0.0, 0.05, 0.5}) {
      const Feature f = oracle_describe(keypoint_at(p), gt, 0.2, sigma, 24, 3);
      double n = 0.0;
      for (double v : f.values) n += v * v;
      CHECK(std::sqrt(n) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  CHECK_THROWS_AS(oracle_describe(keypoint_at(Point3(0, 0, 0)), gt, 0, 0, 2, 1),
                  std::invalid_argument);
}

TEST_CASE("match_features basics") {
  auto feature = [](std::initializer_list<double> v) {
    Feature f;
    f.values = v;
    return f;
  };
  const std::vector<Keypoint> one = {keypoint_at(Point3(0, 0, 0), 0)};
  const std::vector<Keypoint> two = {keypoint_at(Point3(1, 0, 0), 0),
                                     keypoint_at(Point3(2, 0, 0), 1)};

  SUBCASE("identical features give similarity 1") {
    const auto set = match_features({feature({1, 0, 0})},
                                    {feature({1, 0, 0}), feature({0, 5, 0})},
                                    one, two);
    REQUIRE(set.size() == 1);
    CHECK(set[0].similarity == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(set[0].target.cloud_index == 0);
    CHECK(set[0].ratio_score > 0.0);
  }

  SUBCASE("equidistant nearest targets give ratio 0") {
    const auto set = match_features({feature({0, 0, 0})},
                                    {feature({1, 0, 0}), feature({0, 1, 0})},
                                    one, two);
    REQUIRE(set.size() == 1);
    CHECK(set[0].ratio_score == 0.0);
  }

  SUBCASE("duplicate targets: zero second-nearest distance defines ratio 0") {
    const auto set = match_features({feature({1, 0, 0})},
                                    {feature({1, 0, 0}), feature({1, 0, 0})},
                                    one, two);
    REQUIRE(set.size() == 1);
    CHECK(set[0].ratio_score == 0.0);
    CHECK(set[0].similarity == doctest::Approx(1.0));
  }

  SUBCASE("fewer than two targets is an error") {
    CHECK_THROWS_AS(
        match_features({feature({1, 0})}, {feature({1, 0})}, one,
                       {keypoint_at(Point3(1, 0, 0), 0)}),
        std::invalid_argument);
  }
}

TEST_CASE("match_features equals the brute-force double loop") {
  Rng rng(66);
  const int dim = 16;
  auto random_features = [&](int n) {
    std::vector<Feature> fs(n);
    for (auto& f : fs) {
      f.values.resize(dim);
      for (auto& v : f.values) v = rng.normal();
    }
    return fs;
  };
  const auto src = random_features(50);
  const auto tgt = random_features(50);
  std::vector<Keypoint> src_kps, tgt_kps;
  for (int i = 0; i < 50; ++i) {
    src_kps.push_back(keypoint_at(Point3(i, 0, 0), i));
    tgt_kps.push_back(keypoint_at(Point3(0, i, 0), i));
  }

  const auto set = match_features(src, tgt, src_kps, tgt_kps);
  REQUIRE(set.size() == 50);  // one correspondence per source keypoint

  for (int i = 0; i < 50; ++i) {
    double d1 = std::numeric_limits<double>::infinity(), d2 = d1;
    int nn1 = -1;
    for (int j = 0; j < 50; ++j) {
      double d = 0;
      for (int k = 0; k < dim; ++k) {
        const double diff = src[i].values[k] - tgt[j].values[k];
        d += diff * diff;
      }
      d = std::sqrt(d);
      if (d < d1) {
        d2 = d1;
        d1 = d;
        nn1 = j;
      } else if (d < d2) {
        d2 = d;
      }
    }
    CHECK(set[i].target.cloud_index == nn1);
    CHECK(set[i].ratio_score == doctest::Approx(1.0 - d1 / d2).epsilon(1e-12));
    CHECK(set[i].similarity >= 0.0);
    CHECK(set[i].similarity <= 1.0);
    CHECK(set[i].ratio_score >= 0.0);
    CHECK(set[i].ratio_score <= 1.0);
  }
}

TEST_CASE("mutual filtering keeps only reciprocal matches") {
  Rng rng(67);
  auto data = synth_correspondences(50, 0.5, random_rigid_transform(rng, 1.0),
                                    0.0, 1.0, 3);
  // Build features keyed to positions so mutual structure is non-trivial.
  std::vector<Feature> src_feats, tgt_feats;
  std::vector<Keypoint> src_kps, tgt_kps;
  RigidTransform gt = data.gt;
  for (std::size_t i = 0; i < data.set.size(); ++i) {
    Keypoint s = data.set[i].source;
    Keypoint t = data.set[i].target;
    src_feats.push_back(oracle_describe(s, gt, 0.3, 0.0, 8, 5));
    tgt_feats.push_back(oracle_describe(t, RigidTransform{}, 0.3, 0.0, 8, 5));
    src_kps.push_back(s);
    tgt_kps.push_back(t);
  }
  const auto plain = match_features(src_feats, tgt_feats, src_kps, tgt_kps);
  MatchOptions mutual;
  mutual.mutual = true;
  const auto filtered =
      match_features(src_feats, tgt_feats, src_kps, tgt_kps, mutual);

  CHECK(filtered.size() <= plain.size());
  // Every filtered match appears in the plain set.
  std::set<std::pair<int, int>> plain_pairs;
  for (const auto& c : plain.items)
    plain_pairs.insert({c.source.cloud_index, c.target.cloud_index});
  for (const auto& c : filtered.items)
    CHECK(plain_pairs.contains({c.source.cloud_index, c.target.cloud_index}));
  // No two filtered matches share a target.
  std::set<int> targets;
  for (const auto& c : filtered.items) {
    CHECK(!targets.contains(c.target.cloud_index));
    targets.insert(c.target.cloud_index);
  }
}
