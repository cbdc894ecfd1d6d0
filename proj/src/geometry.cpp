#include "cgbench/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "cgbench/kdtree.hpp"

namespace cgbench {

double PointCloud::resolution() const {
  if (resolution_cache_ < 0.0) resolution_cache_ = compute_resolution(*this);
  return resolution_cache_;
}

bool RigidTransform::is_valid(double tol) const {
  const Eigen::Matrix3d gram = rotation.transpose() * rotation;
  if (((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff()) > tol)
    return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

double compute_resolution(const PointCloud& cloud) {
  if (cloud.size() < 2) throw std::runtime_error("degenerate cloud");
  NeighborIndex index(cloud);
  return compute_resolution(cloud, index);
}

double compute_resolution(const PointCloud& cloud, const NeighborIndex& index) {
  if (cloud.size() < 2) throw std::runtime_error("degenerate cloud");
  double sum = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto nbrs = index.knn(cloud.points[i], 2);
    // nbrs[0] is the point itself (distance 0, lowest index on ties).
    sum += nbrs[1].distance;
  }
  return sum / static_cast<double>(cloud.size());
}

RigidTransform estimate_rigid_transform(
    std::span<const std::pair<Point3, Point3>> pairs) {
  const std::size_t n = pairs.size();
  if (n < 3)
    throw std::invalid_argument("estimate_rigid_transform: need >= 3 pairs");

  Eigen::Vector3d src_centroid = Eigen::Vector3d::Zero();
  Eigen::Vector3d dst_centroid = Eigen::Vector3d::Zero();
  for (const auto& [s, d] : pairs) {
    src_centroid += s;
    dst_centroid += d;
  }
  src_centroid /= static_cast<double>(n);
  dst_centroid /= static_cast<double>(n);

  Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d src_scatter = Eigen::Matrix3d::Zero();
  for (const auto& [s, d] : pairs) {
    const Eigen::Vector3d sd = s - src_centroid;
    const Eigen::Vector3d dd = d - dst_centroid;
    cross += sd * dd.transpose();
    src_scatter += sd * sd.transpose();
  }

  // Collinear or coincident source points leave the rotation unconstrained:
  // the scatter must have rank >= 2.
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> scatter_eig(src_scatter);
  const Eigen::Vector3d ev = scatter_eig.eigenvalues();  // ascending
  if (!(ev(2) > 0.0) || ev(1) <= 1e-18 * ev(2))
    throw std::runtime_error("degenerate sample");

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  Eigen::Matrix3d v = svd.matrixV();
  Eigen::Vector3d diag(1.0, 1.0, (v * u.transpose()).determinant());

  RigidTransform out;
  out.rotation = v * diag.asDiagonal() * u.transpose();
  out.translation = dst_centroid - out.rotation * src_centroid;
  return out;
}

LRF compute_lrf(const PointCloud& cloud, const NeighborIndex& index,
                const Point3& center, double radius) {
  const auto nbrs = index.radius(center, radius);
  if (nbrs.size() < 3) throw std::runtime_error("insufficient support");

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  double weight_sum = 0.0;
  for (const auto& nb : nbrs) {
    const double w = (radius - nb.distance) / radius;
    const Eigen::Vector3d d = cloud.points[nb.index] - center;
    cov += w * d * d.transpose();
    weight_sum += w;
  }
  if (weight_sum > 0.0) cov /= weight_sum;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  // Eigenvalues ascending: x = largest, z = smallest candidate.
  Eigen::Vector3d x_axis = eig.eigenvectors().col(2);
  Eigen::Vector3d z_axis = eig.eigenvectors().col(0);

  auto disambiguate = [&](Eigen::Vector3d& axis) {
    int negative = 0, positive = 0;
    for (const auto& nb : nbrs) {
      const double dot = axis.dot(cloud.points[nb.index] - center);
      if (dot < 0.0)
        ++negative;
      else if (dot > 0.0)
        ++positive;
    }
    if (negative > positive) axis = -axis;
  };
  disambiguate(x_axis);
  disambiguate(z_axis);

  const Eigen::Vector3d y_axis = z_axis.cross(x_axis);

  LRF lrf;
  lrf.origin = center;
  lrf.axes.row(0) = x_axis;
  lrf.axes.row(1) = y_axis;
  lrf.axes.row(2) = z_axis;
  return lrf;
}

double rotation_angle_deg(const Eigen::Matrix3d& rotation) {
  const double arg = std::clamp((rotation.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(arg) * 180.0 / M_PI;
}

double lrf_angle_deg(const LRF& a, const LRF& b) {
  return rotation_angle_deg(a.axes * b.axes.transpose());
}

}  // namespace cgbench
