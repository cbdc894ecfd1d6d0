#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "cgbench/io.hpp"
#include "cgbench/rng.hpp"
#include "cgbench/synthdata.hpp"
#include "helpers.hpp"

using namespace cgbench;

TEST_CASE("PLY round-trip with normals") {
  PointCloud cloud;
  cloud.points = {Point3(0.1, -0.25, 1e-17), Point3(2, 3, 4)};
  cloud.normals = {Eigen::Vector3d(0, 0, 1), Eigen::Vector3d(1, 0, 0)};

  std::ostringstream out;
  save_ply(out, cloud);
  std::istringstream in(out.str());
  const PointCloud back = load_ply(in);

  REQUIRE(back.size() == 2);
  REQUIRE(back.has_normals());
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back.points[i] == cloud.points[i]);  // bit-identical via %.17g
    CHECK(back.normals[i] == cloud.normals[i]);
  }
}

TEST_CASE("PLY reader skips unknown properties and other elements") {
  const char* text =
      "ply\n"
      "format ascii 1.0\n"
      "comment synthetic fixture\n"
      "element vertex 2\n"
      "property float confidence\n"
      "property double x\n"
      "property double y\n"
      "property double z\n"
      "element face 1\n"
      "property list uchar int vertex_indices\n"
      "end_header\n"
      "0.5 1 2 3\n"
      "0.25 4 5 6\n"
      "3 0 1 0\n";
  std::istringstream in(text);
  const PointCloud cloud = load_ply(in);
  REQUIRE(cloud.size() == 2);
  CHECK(cloud.points[0] == Point3(1, 2, 3));
  CHECK(cloud.points[1] == Point3(4, 5, 6));
  CHECK(!cloud.has_normals());
}

TEST_CASE("PLY reader rejects binary and malformed input") {
  std::istringstream binary("ply\nformat binary_little_endian 1.0\nend_header\n");
  CHECK_THROWS_AS(load_ply(binary), std::runtime_error);

  std::istringstream junk("not a ply\n");
  CHECK_THROWS_AS(load_ply(junk), std::runtime_error);

  std::istringstream nan_coord(
      "ply\nformat ascii 1.0\nelement vertex 1\nproperty double x\n"
      "property double y\nproperty double z\nend_header\nnan 0 0\n");
  CHECK_THROWS_AS(load_ply(nan_coord), std::runtime_error);
}

TEST_CASE("pose file round-trip with comments") {
  Rng rng(3);
  std::vector<RigidTransform> poses;
  for (int i = 0; i < 3; ++i) {
    RigidTransform t;
    t.rotation = rng.rotation();
    t.translation = Point3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    poses.push_back(t);
  }

  std::ostringstream out;
  out << "# ground truth poses\n";
  save_poses(out, poses);
  std::istringstream in(out.str());
  const auto back = load_poses(in);

  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK((back[i].rotation - poses[i].rotation).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(back[i].translation == poses[i].translation);
    CHECK(back[i].is_valid());
  }

  std::istringstream bad("1 0 0 0 1 0 0 0 2 0 0 0\n");  // det 2
  CHECK_THROWS_AS(load_poses(bad), std::runtime_error);
}

TEST_CASE("correspondence JSON round-trips bit-identically") {
  Rng rng(9);
  CorrespondenceSet set;
  for (int i = 0; i < 25; ++i) {
    auto c = testing::make_corr(
        Point3(rng.normal(), rng.normal() * 1e-7, rng.normal() * 1e9),
        Point3(rng.normal(), rng.normal(), rng.normal()), rng.uniform(),
        rng.uniform(), i, static_cast<int>(rng.below(40)));
    set.items.push_back(c);
  }

  std::ostringstream out;
  save_correspondences(out, set);
  std::istringstream in(out.str());
  const CorrespondenceSet back = load_correspondences(in);

  REQUIRE(back.size() == set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    CHECK(back[i].source.position == set[i].source.position);
    CHECK(back[i].target.position == set[i].target.position);
    CHECK(back[i].similarity == set[i].similarity);
    CHECK(back[i].ratio_score == set[i].ratio_score);
    CHECK(back[i].source.cloud_index == set[i].source.cloud_index);
    CHECK(back[i].target.cloud_index == set[i].target.cloud_index);
  }

  // Second hop produces identical bytes.
  std::ostringstream out2;
  save_correspondences(out2, back);
  CHECK(out.str() == out2.str());
}

TEST_CASE("grouping result JSON round-trip") {
  GroupingResult r;
  r.method = "gc";
  r.selected = {1, 4, 7};
  r.scores = {0.25, 1.0, 0.1, 0.75, 1.0 / 3.0, 0, 0.5, 1};
  r.elapsed_s = 0.001953125;

  std::ostringstream out;
  save_grouping_result(out, r);
  std::istringstream in(out.str());
  const GroupingResult back = load_grouping_result(in);

  CHECK(back.method == r.method);
  CHECK(back.selected == r.selected);
  CHECK(back.scores == r.scores);
  CHECK(back.elapsed_s == r.elapsed_s);
}

TEST_CASE("synthetic pair bundle round-trip") {
  const auto dir = std::filesystem::temp_directory_path() / "cgbench_io_test";
  std::filesystem::create_directories(dir);

  Rng rng(21);
  SyntheticPair pair;
  pair.source = make_shape_cloud(200, 5);
  pair.gt = random_rigid_transform(rng, 1.0);
  pair.target = apply_transform(pair.source, pair.gt);
  pair.meta = PairMeta{"noise", 0.25, 77};

  save_pair(dir / "pair", pair);
  const SyntheticPair back = load_pair(dir / "pair");

  CHECK(back.source.size() == pair.source.size());
  CHECK(back.target.size() == pair.target.size());
  CHECK(back.source.points[13] == pair.source.points[13]);
  CHECK((back.gt.rotation - pair.gt.rotation).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(back.meta.nuisance == "noise");
  CHECK(back.meta.level == 0.25);
  CHECK(back.meta.seed == 77);

  std::filesystem::remove_all(dir);
}
