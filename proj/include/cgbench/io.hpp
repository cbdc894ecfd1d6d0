#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cgbench/features.hpp"
#include "cgbench/geometry.hpp"
#include "cgbench/groupers.hpp"
#include "cgbench/synthdata.hpp"

namespace cgbench {

// ---- PLY (ASCII variant only) ----------------------------------------------
// Header: "ply" / "format ascii 1.0"; element vertex with properties x y z
// and optionally nx ny nz; unknown properties and other elements skipped.

PointCloud load_ply(std::istream& in, const std::string& origin = "<stream>");
PointCloud load_ply(const std::filesystem::path& path);
void save_ply(std::ostream& out, const PointCloud& cloud);
void save_ply(const std::filesystem::path& path, const PointCloud& cloud);

// ---- Ground-truth pose files ------------------------------------------------
// One transform per line: 12 whitespace-separated reals, row-major 3x3 R then
// t. '#' starts a comment. Rotations are validated (orthonormal, det +1
// within 1e-6) and re-orthonormalized to the nearest rotation.

std::vector<RigidTransform> load_poses(std::istream& in,
                                       const std::string& origin = "<stream>");
std::vector<RigidTransform> load_poses(const std::filesystem::path& path);
void save_poses(std::ostream& out, const std::vector<RigidTransform>& poses);
void save_poses(const std::filesystem::path& path,
                const std::vector<RigidTransform>& poses);

// ---- Correspondence JSON ----------------------------------------------------
// Array of {src:[x,y,z], dst:[x,y,z], sim, ratio, src_idx, dst_idx}; numbers
// printed with 17 significant digits so finite values round-trip
// bit-identically.

void save_correspondences(std::ostream& out, const CorrespondenceSet& set);
void save_correspondences(const std::filesystem::path& path,
                          const CorrespondenceSet& set);
CorrespondenceSet load_correspondences(std::istream& in);
CorrespondenceSet load_correspondences(const std::filesystem::path& path);

// ---- GroupingResult JSON ----------------------------------------------------
// {method, selected:[int], scores:[real], elapsed_s: real}

void save_grouping_result(std::ostream& out, const GroupingResult& result);
void save_grouping_result(const std::filesystem::path& path,
                          const GroupingResult& result);
GroupingResult load_grouping_result(std::istream& in);
GroupingResult load_grouping_result(const std::filesystem::path& path);

// ---- SyntheticPair bundle ---------------------------------------------------
// <prefix>_source.ply, <prefix>_target.ply, <prefix>_pose.txt and a JSON meta
// sidecar {nuisance, level, seed}.

void save_pair(const std::filesystem::path& prefix, const SyntheticPair& pair);
SyntheticPair load_pair(const std::filesystem::path& prefix);

/// %.17g formatting used across the text interfaces.
std::string format_real(double v);

}  // namespace cgbench
