#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "cgbench/features.hpp"
#include "cgbench/geometry.hpp"

namespace cgbench {

/// Tuning knobs of the nine grouping methods. Length-valued parameters are
/// expressed in pr units and scaled by GroupingContext::pr at run time.
struct GrouperParams {
  // ss
  bool t_ss_adaptive = true;
  double t_ss_fixed = std::numeric_limits<double>::quiet_NaN();
  // nnsr
  double t_nnsr = 0.8;
  // ransac
  int n_ransac = 10000;
  double d_ransac_pr = 5.0;
  // st
  double t_st = 0.6;
  // gc
  double t_gc_pr = 3.0;
  // gtm
  int n_gtm = 100;
  bool t_gtm_adaptive = true;
  double t_gtm_fixed = std::numeric_limits<double>::quiet_NaN();
  bool gtm_jitter_start = false;  // seeded perturbation of the uniform start
  // si
  int kappa = 250;
  double varsigma = 0.9;
  double delta_pr = 5.0;
  double si_ratio_init = 0.8;
  // cv
  int k_cv = 200;
  bool t_cv_adaptive = true;
  double t_cv_fixed = std::numeric_limits<double>::quiet_NaN();
  double delta_r_pr = 2.0;
  double delta_l_deg = 10.0;
  // 3dhv
  double hough_bin_pr = 4.0;
  bool hough_include_neighbors = false;  // also select the 26-neighborhood

  std::uint64_t rng_seed = 0;
};

/// Per-pair context shared by the groupers: the clouds, the resolution used
/// for pr-relative parameters, and per-keypoint LRFs (keyed by
/// Keypoint::cloud_index) for the methods that need them (si, cv, 3dhv).
struct GroupingContext {
  const PointCloud* source_cloud = nullptr;
  const PointCloud* target_cloud = nullptr;
  double pr = 0.0;
  std::unordered_map<int, LRF> source_lrfs;
  std::unordered_map<int, LRF> target_lrfs;
};

struct GroupingResult {
  std::vector<std::size_t> selected;  // unique, sorted, within bounds
  std::vector<double> scores;         // one per input correspondence
  double elapsed_s = 0.0;
  std::string method;
};

inline constexpr std::array<std::string_view, 9> kMethodNames = {
    "ss", "nnsr", "st", "ransac", "gc", "3dhv", "gtm", "si", "cv"};

/// 256-bin histogram threshold maximizing between-class variance; returns
/// the winning bin edge. Callers treat values strictly greater than the
/// threshold as selected. Throws "degenerate distribution" when all values
/// are equal.
double otsu_threshold(std::span<const double> values);

/// min(d/d', d'/d) over the source/target keypoint baselines; 0 when either
/// baseline is shorter than 1e-12 (duplicate keypoints carry no rigidity
/// information).
double rigidity_ratio(const Correspondence& a, const Correspondence& b);

/// | d - d' | over the source/target keypoint baselines.
double rigidity_diff(const Correspondence& a, const Correspondence& b);

// The nine grouping methods. Each is a pure function of (set, params, ctx)
// and fills selected/scores/elapsed/method.
GroupingResult group_ss(const CorrespondenceSet& set, const GrouperParams& params,
                        const GroupingContext& ctx);
GroupingResult group_nnsr(const CorrespondenceSet& set, const GrouperParams& params,
                          const GroupingContext& ctx);
GroupingResult group_st(const CorrespondenceSet& set, const GrouperParams& params,
                        const GroupingContext& ctx);
GroupingResult group_ransac(const CorrespondenceSet& set, const GrouperParams& params,
                            const GroupingContext& ctx);
GroupingResult group_gc(const CorrespondenceSet& set, const GrouperParams& params,
                        const GroupingContext& ctx);
GroupingResult group_3dhv(const CorrespondenceSet& set, const GrouperParams& params,
                          const GroupingContext& ctx);
GroupingResult group_gtm(const CorrespondenceSet& set, const GrouperParams& params,
                         const GroupingContext& ctx);
GroupingResult group_si(const CorrespondenceSet& set, const GrouperParams& params,
                        const GroupingContext& ctx);
GroupingResult group_cv(const CorrespondenceSet& set, const GrouperParams& params,
                        const GroupingContext& ctx);

/// Dispatch by method name ("ss", "nnsr", "st", "ransac", "gc", "3dhv",
/// "gtm", "si", "cv"); throws std::invalid_argument listing the valid names
/// for anything else.
GroupingResult run_grouper(std::string_view method, const CorrespondenceSet& set,
                           const GrouperParams& params, const GroupingContext& ctx);

/// RANSAC with access to the winning hypothesis (the plain grouper drops it).
struct RansacOutcome {
  GroupingResult result;
  bool found = false;
  RigidTransform transform;
  int inlier_count = 0;
};
RansacOutcome run_ransac(const CorrespondenceSet& set, const GrouperParams& params,
                         const GroupingContext& ctx);

/// Replicator dynamics over a symmetric non-negative payoff matrix starting
/// from the uniform distribution. Stops early when the mean payoff xᵀΠx
/// drops below 1e-15 or the iterate moves less than 1e-12 in max-norm.
struct ReplicatorResult {
  Eigen::VectorXd final;
  std::vector<Eigen::VectorXd> trajectory;  // filled when recording
  int steps_run = 0;
};
ReplicatorResult replicator_dynamics(const Eigen::MatrixXd& payoff, int max_steps,
                                     bool record_trajectory = false,
                                     const Eigen::VectorXd* start = nullptr);

/// Power iteration for the principal eigenvector of a non-negative symmetric
/// matrix from the normalized all-ones start. If M annihilates the current
/// iterate the iterate is kept (uniform over a zero matrix), so isolated
/// rows still produce exact zeros after the first multiply.
Eigen::VectorXd principal_eigenvector(const Eigen::MatrixXd& m,
                                      int max_iterations = 1000,
                                      double tolerance = 1e-8);

}  // namespace cgbench
