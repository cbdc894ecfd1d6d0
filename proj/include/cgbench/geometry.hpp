#pragma once

#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace cgbench {

using Point3 = Eigen::Vector3d;

class NeighborIndex;

/// Point cloud with optional per-point unit normals. `resolution()` is the
/// mean distance from each point to its nearest other point, i.e. the unit
/// ("pr") in which all length-scale parameters of the harness are expressed.
struct PointCloud {
  std::vector<Point3> points;
  std::vector<Eigen::Vector3d> normals;  // empty, or same length as points

  std::size_t size() const { return points.size(); }
  bool has_normals() const { return !normals.empty(); }

  /// Cached mean nearest-neighbor distance. Throws "degenerate cloud" for
  /// fewer than 2 points. The cache is computed on first use; treat the
  /// cloud as immutable afterwards.
  double resolution() const;

 private:
  mutable double resolution_cache_ = -1.0;
};

/// SE(3) element. Rows/columns follow the usual column-vector convention:
/// apply(p) = rotation * p + translation.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Point3 apply(const Point3& p) const { return rotation * p + translation; }

  RigidTransform inverse() const {
    RigidTransform out;
    out.rotation = rotation.transpose();
    out.translation = -(out.rotation * translation);
    return out;
  }

  /// this ∘ other (apply `other` first).
  RigidTransform compose(const RigidTransform& other) const {
    RigidTransform out;
    out.rotation = rotation * other.rotation;
    out.translation = rotation * other.translation + translation;
    return out;
  }

  bool is_valid(double tol = 1e-9) const;
};

/// Right-handed orthonormal local reference frame. Rows of `axes` are the
/// x/y/z axis vectors expressed in global coordinates, so `axes * v` maps a
/// global vector into the local frame.
struct LRF {
  Point3 origin = Point3::Zero();
  Eigen::Matrix3d axes = Eigen::Matrix3d::Identity();
};

/// Mean over all points of the distance to the nearest *other* point.
double compute_resolution(const PointCloud& cloud);
double compute_resolution(const PointCloud& cloud, const NeighborIndex& index);

/// Least-squares SE(3) fit (centroid subtraction, cross-covariance SVD,
/// determinant-sign reflection fix). Requires >= 3 pairs and non-collinear
/// source points; throws std::runtime_error("degenerate sample") otherwise.
RigidTransform estimate_rigid_transform(
    std::span<const std::pair<Point3, Point3>> pairs);

/// Covariance-based LRF over the neighbors of `center` within `radius`,
/// distance-weighted by (radius - d)/radius. Eigenvectors sorted by
/// descending eigenvalue give the x/y/z candidates; x and z signs point
/// toward the majority of neighbor displacements, y = z × x.
/// Throws std::runtime_error("insufficient support") with < 3 neighbors.
LRF compute_lrf(const PointCloud& cloud, const NeighborIndex& index,
                const Point3& center, double radius);

/// Rotation angle in degrees of a rotation matrix, trace formula with the
/// acos argument clamped to [-1, 1].
double rotation_angle_deg(const Eigen::Matrix3d& rotation);

/// Angle in degrees between two frames: acos((trace(a · b⁻¹) - 1)/2).
double lrf_angle_deg(const LRF& a, const LRF& b);

}  // namespace cgbench
