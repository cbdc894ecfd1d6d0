#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cgbench/geometry.hpp"
#include "cgbench/kdtree.hpp"
#include "cgbench/rng.hpp"
#include "helpers.hpp"

using namespace cgbench;
using cgbench::testing::quaternion_angle_deg;

namespace {

PointCloud random_cloud(int n, Rng& rng, double extent = 1.0) {
  PointCloud cloud;
  for (int i = 0; i < n; ++i)
    cloud.points.emplace_back(rng.uniform(-extent, extent),
                              rng.uniform(-extent, extent),
                              rng.uniform(-extent, extent));
  return cloud;
}

}  // namespace

TEST_CASE("compute_resolution basic cases") {
  PointCloud two;
  two.points = {Point3(0, 0, 0), Point3(3, 0, 0)};
  CHECK(compute_resolution(two) == doctest::Approx(3.0).epsilon(1e-15));

  PointCloud collinear;
  for (int i = 0; i < 4; ++i) collinear.points.emplace_back(i * 1.0, 0, 0);
  CHECK(compute_resolution(collinear) == doctest::Approx(1.0).epsilon(1e-15));

  PointCloud one;
  one.points = {Point3(0, 0, 0)};
  CHECK_THROWS_WITH_AS(compute_resolution(one), "degenerate cloud",
                       std::runtime_error);
}

TEST_CASE("compute_resolution equals brute-force double loop") {
  Rng rng(42);
  PointCloud cloud = random_cloud(100, rng);
  double sum = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cloud.size(); ++j) {
      if (i == j) continue;
      best = std::min(best, (cloud.points[i] - cloud.points[j]).norm());
    }
    sum += best;
  }
  CHECK(compute_resolution(cloud) == sum / cloud.size());
}

TEST_CASE("resolution of a decimated cloud is usually not smaller") {
  int ok = 0;
  for (int seed = 0; seed < 50; ++seed) {
    Rng rng(900 + seed);
    PointCloud cloud = random_cloud(300, rng);
    const double base = compute_resolution(cloud);
    PointCloud sub;
    for (std::size_t i = 0; i < cloud.size(); ++i)
      if (rng.uniform() < 0.4) sub.points.push_back(cloud.points[i]);
    if (sub.size() < 2) sub.points.push_back(cloud.points[0]);
    if (compute_resolution(sub) >= base) ++ok;
  }
  CHECK(ok >= 48);  // >= 95% of trials
}

TEST_CASE("RigidTransform::apply") {
  RigidTransform identity;
  CHECK(identity.apply(Point3(1, 2, 3)) == Point3(1, 2, 3));

  RigidTransform shift;
  shift.translation = Point3(1, 0, 0);
  CHECK(shift.apply(Point3(0, 0, 0)) == Point3(1, 0, 0));

  RigidTransform rot90;
  rot90.rotation << 0, -1, 0, 1, 0, 0, 0, 0, 1;  // 90 deg about z
  const Point3 p = rot90.apply(Point3(1, 0, 0));
  CHECK(p.x() == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(p.y() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(p.z() == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("estimate_rigid_transform identity and errors") {
  std::vector<std::pair<Point3, Point3>> pairs = {
      {Point3(0, 0, 0), Point3(0, 0, 0)},
      {Point3(1, 0, 0), Point3(1, 0, 0)},
      {Point3(0, 1, 0), Point3(0, 1, 0)}};
  const RigidTransform t = estimate_rigid_transform(pairs);
  CHECK((t.rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(t.translation.norm() < 1e-12);

  pairs.pop_back();
  CHECK_THROWS_AS(estimate_rigid_transform(pairs), std::invalid_argument);

  std::vector<std::pair<Point3, Point3>> collinear = {
      {Point3(0, 0, 0), Point3(0, 1, 0)},
      {Point3(1, 0, 0), Point3(1, 1, 0)},
      {Point3(2, 0, 0), Point3(2, 1, 0)}};
  CHECK_THROWS_WITH_AS(estimate_rigid_transform(collinear), "degenerate sample",
                       std::runtime_error);
}

TEST_CASE("estimate_rigid_transform recovers sampled transforms from triples") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    RigidTransform truth;
    truth.rotation = rng.rotation();
    truth.translation =
        Point3(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    std::vector<std::pair<Point3, Point3>> pairs;
    for (int k = 0; k < 3; ++k) {
      const Point3 p(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      pairs.emplace_back(p, truth.apply(p));
    }
    RigidTransform est;
    try {
      est = estimate_rigid_transform(pairs);
    } catch (const std::runtime_error&) {
      continue;  // a pathologically thin triple; degeneracy path has its own test
    }
    // Quaternion-route angle: the trace/acos formula bottoms out near
    // sqrt(eps) for tiny angles and cannot resolve 1e-9 rad.
    const double rot_err =
        quaternion_angle_deg(est.rotation * truth.rotation.transpose()) * M_PI /
        180.0;
    CHECK(rot_err < 1e-9);
    CHECK((est.translation - truth.translation).norm() < 1e-9);
  }
}

TEST_CASE("estimate_rigid_transform is pair-order invariant") {
  Rng rng(11);
  RigidTransform truth;
  truth.rotation = rng.rotation();
  truth.translation = Point3(0.3, -1.0, 2.0);
  std::vector<std::pair<Point3, Point3>> pairs;
  for (int k = 0; k < 12; ++k) {
    const Point3 p(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const Point3 noise(1e-3 * rng.normal(), 1e-3 * rng.normal(),
                       1e-3 * rng.normal());
    pairs.emplace_back(p, truth.apply(p) + noise);
  }
  const RigidTransform a = estimate_rigid_transform(pairs);
  for (int s = 0; s < 5; ++s) {
    for (std::size_t i = 0; i + 1 < pairs.size(); ++i)
      std::swap(pairs[i], pairs[i + rng.below(pairs.size() - i)]);
    const RigidTransform b = estimate_rigid_transform(pairs);
    CHECK((a.rotation - b.rotation).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((a.translation - b.translation).cwiseAbs().maxCoeff() < 1e-12);
  }
}

namespace {

PointCloud bumpy_patch(Rng& rng, int n = 60) {
  // Anisotropic patch with a distinct covariance spectrum.
  PointCloud patch;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform(-1.0, 1.0);
    const double v = rng.uniform(-0.5, 0.5);
    patch.points.emplace_back(u, v, 0.08 * std::sin(3.0 * u) + 0.05 * v * v);
  }
  return patch;
}

}  // namespace

TEST_CASE("compute_lrf planar patch and orthonormality") {
  Rng rng(5);
  PointCloud plane;
  for (int i = 0; i < 50; ++i)
    plane.points.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1), 0.0);
  NeighborIndex index(plane);
  const LRF lrf = compute_lrf(plane, index, Point3(0, 0, 0), 2.0);

  CHECK(std::abs(std::abs(lrf.axes(2, 2)) - 1.0) < 1e-6);  // z = +/- e_z
  const Eigen::Matrix3d gram = lrf.axes * lrf.axes.transpose();
  CHECK((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(lrf.axes.determinant() == doctest::Approx(1.0).epsilon(1e-9));

  PointCloud tiny;
  tiny.points = {Point3(0, 0, 0), Point3(1, 0, 0)};
  NeighborIndex tiny_index(tiny);
  CHECK_THROWS_WITH_AS(compute_lrf(tiny, tiny_index, Point3(0, 0, 0), 2.0),
                       "insufficient support", std::runtime_error);
}

TEST_CASE("compute_lrf rotates with the neighborhood") {
  Rng rng(6);
  PointCloud patch = bumpy_patch(rng);
  NeighborIndex index(patch);
  const LRF base = compute_lrf(patch, index, Point3(0, 0, 0), 3.0);

  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Matrix3d r = rng.rotation();
    PointCloud rotated;
    for (const auto& p : patch.points) rotated.points.push_back(r * p);
    NeighborIndex rotated_index(rotated);
    const LRF turned = compute_lrf(rotated, rotated_index, Point3(0, 0, 0), 3.0);
    CHECK((turned.axes - base.axes * r.transpose()).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("lrf_angle_deg basic and against the quaternion oracle") {
  LRF a, b;
  CHECK(lrf_angle_deg(a, b) == doctest::Approx(0.0));

  b.axes << 0, -1, 0, 1, 0, 0, 0, 0, 1;  // 90 deg about z... as row frame
  CHECK(lrf_angle_deg(a, b) == doctest::Approx(90.0).epsilon(1e-12));

  Rng rng(12);
  for (int i = 0; i < 1000; ++i) {
    LRF u, v;
    u.axes = rng.rotation();
    v.axes = rng.rotation();
    const double trace_route = lrf_angle_deg(u, v);
    const double quat_route =
        quaternion_angle_deg(u.axes * v.axes.transpose());
    CHECK(std::abs(trace_route - quat_route) < 1e-6);
    CHECK(std::abs(lrf_angle_deg(u, v) - lrf_angle_deg(v, u)) < 1e-9);
  }
}

TEST_CASE("NeighborIndex matches a linear scan") {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(120));
    PointCloud cloud = random_cloud(n, rng);
    // Occasionally inject duplicates to exercise tie handling.
    if (n > 4 && trial % 3 == 0) cloud.points[1] = cloud.points[0];
    NeighborIndex index(cloud);

    for (int q = 0; q < 5; ++q) {
      const Point3 query(rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2),
                         rng.uniform(-1.2, 1.2));

      const std::size_t k = 1 + rng.below(std::min<std::uint64_t>(n, 12));
      auto got = index.knn(query, k);
      std::vector<std::pair<double, std::size_t>> brute;
      for (std::size_t i = 0; i < cloud.size(); ++i)
        brute.emplace_back((cloud.points[i] - query).squaredNorm(), i);
      std::sort(brute.begin(), brute.end());
      REQUIRE(got.size() == k);
      for (std::size_t i = 0; i < k; ++i) {
        CHECK(got[i].index == brute[i].second);
        CHECK(got[i].distance == std::sqrt(brute[i].first));
      }

      const double radius = rng.uniform(0.1, 1.0);
      auto in_radius = index.radius(query, radius);
      std::vector<std::size_t> brute_radius;
      for (std::size_t i = 0; i < cloud.size(); ++i)
        if ((cloud.points[i] - query).squaredNorm() <= radius * radius)
          brute_radius.push_back(i);
      REQUIRE(in_radius.size() == brute_radius.size());
      for (std::size_t i = 0; i < in_radius.size(); ++i)
        CHECK(in_radius[i].index == brute_radius[i]);
    }
  }
}

TEST_CASE("rotation_angle_deg clamps drifting traces") {
  Eigen::Matrix3d nearly = Eigen::Matrix3d::Identity();
  nearly(0, 0) = 1.0 + 1e-12;  // trace slightly above 3
  CHECK(std::isfinite(rotation_angle_deg(nearly)));
  CHECK(rotation_angle_deg(nearly) == 0.0);
}
