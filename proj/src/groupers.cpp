#include "cgbench/groupers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>

#include <Eigen/Dense>

#include "cgbench/kdtree.hpp"
#include "cgbench/rng.hpp"

namespace cgbench {

namespace {

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

GroupingResult finalize(std::string method, std::vector<std::size_t> selected,
                        std::vector<double> scores, const Timer& timer) {
  std::sort(selected.begin(), selected.end());
  GroupingResult r;
  r.method = std::move(method);
  r.selected = std::move(selected);
  r.scores = std::move(scores);
  r.elapsed_s = timer.seconds();
  return r;
}

/// Indices with value strictly above the Otsu threshold; empty on a
/// degenerate (single-valued) distribution.
std::vector<std::size_t> select_above_otsu(std::span<const double> values) {
  double threshold = 0.0;
  try {
    threshold = otsu_threshold(values);
  } catch (const std::runtime_error&) {
    return {};
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] > threshold) out.push_back(i);
  return out;
}

std::vector<std::size_t> select_above_fixed(std::span<const double> values,
                                            double threshold) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] >= threshold) out.push_back(i);
  return out;
}

double require_pr(const GroupingContext& ctx, const char* method) {
  if (!(ctx.pr > 0.0))
    throw std::invalid_argument(std::string(method) +
                                ": context resolution (pr) must be positive");
  return ctx.pr;
}

const LRF& lookup_lrf(const std::unordered_map<int, LRF>& lrfs, int index) {
  const auto it = lrfs.find(index);
  if (it == lrfs.end()) throw std::runtime_error("context incomplete");
  return it->second;
}

void require_lrfs(const CorrespondenceSet& set, const GroupingContext& ctx) {
  for (const auto& c : set.items) {
    lookup_lrf(ctx.source_lrfs, c.source.cloud_index);
    lookup_lrf(ctx.target_lrfs, c.target.cloud_index);
  }
}

bool same_keypoint(const Keypoint& a, const Keypoint& b) {
  if (a.cloud_index >= 0 && b.cloud_index >= 0)
    return a.cloud_index == b.cloud_index;
  return a.position == b.position;
}

/// Indices ordered by (ratio_score descending, index ascending), first k.
std::vector<std::size_t> top_by_ratio(const CorrespondenceSet& set,
                                      std::size_t k) {
  std::vector<std::size_t> order(set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ra = set[a].ratio_score;
    const double rb = set[b].ratio_score;
    if (ra != rb) return ra > rb;
    return a < b;
  });
  order.resize(std::min(k, order.size()));
  return order;
}

}  // namespace

double otsu_threshold(std::span<const double> values) {
  if (values.size() < 2)
    throw std::invalid_argument("otsu_threshold: need >= 2 values");
  double lo = values[0], hi = values[0];
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi > lo)) throw std::runtime_error("degenerate distribution");

  constexpr int kBins = 256;
  const double width = (hi - lo) / kBins;
  int hist[kBins] = {};
  for (double v : values) {
    int b = static_cast<int>((v - lo) / (hi - lo) * kBins);
    b = std::clamp(b, 0, kBins - 1);
    ++hist[b];
  }

  // Between-class variance over the 255 interior bin edges; bin indices act
  // as the class values (same argmax as bin centers).
  const double total = static_cast<double>(values.size());
  double full_sum = 0.0;
  for (int b = 0; b < kBins; ++b) full_sum += static_cast<double>(hist[b]) * b;

  double best = -1.0;
  int best_edge = 1;
  double w0 = 0.0, sum0 = 0.0;
  for (int k = 1; k < kBins; ++k) {
    w0 += hist[k - 1];
    sum0 += static_cast<double>(hist[k - 1]) * (k - 1);
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double mu0 = sum0 / w0;
    const double mu1 = (full_sum - sum0) / w1;
    const double variance = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (variance > best) {
      best = variance;
      best_edge = k;
    }
  }
  return lo + best_edge * width;
}

double rigidity_ratio(const Correspondence& a, const Correspondence& b) {
  const double d = (a.source.position - b.source.position).norm();
  const double dp = (a.target.position - b.target.position).norm();
  if (d < 1e-12 || dp < 1e-12) return 0.0;
  return std::min(d / dp, dp / d);
}

double rigidity_diff(const Correspondence& a, const Correspondence& b) {
  const double d = (a.source.position - b.source.position).norm();
  const double dp = (a.target.position - b.target.position).norm();
  return std::abs(d - dp);
}

// ---- Individual-based methods -----------------------------------------------

GroupingResult group_ss(const CorrespondenceSet& set, const GrouperParams& params,
                        const GroupingContext&) {
  Timer timer;
  std::vector<double> scores(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) scores[i] = set[i].similarity;
  auto selected = params.t_ss_adaptive
                      ? select_above_otsu(scores)
                      : select_above_fixed(scores, params.t_ss_fixed);
  return finalize("ss", std::move(selected), std::move(scores), timer);
}

GroupingResult group_nnsr(const CorrespondenceSet& set,
                          const GrouperParams& params, const GroupingContext&) {
  Timer timer;
  std::vector<double> scores(set.size());
  std::vector<std::size_t> selected;
  for (std::size_t i = 0; i < set.size(); ++i) {
    scores[i] = set[i].ratio_score;
    if (scores[i] >= params.t_nnsr) selected.push_back(i);
  }
  return finalize("nnsr", std::move(selected), std::move(scores), timer);
}

GroupingResult group_si(const CorrespondenceSet& set, const GrouperParams& params,
                        const GroupingContext& ctx) {
  Timer timer;
  const std::size_t n = set.size();
  if (n < 2) throw std::invalid_argument("group_si: need >= 2 correspondences");
  require_lrfs(set, ctx);
  const double pr = require_pr(ctx, "group_si");
  const double delta = params.delta_pr * pr;
  const std::size_t kappa = static_cast<std::size_t>(params.kappa);

  std::vector<char> ratio_ok(n, 0);
  bool any_ratio = false;
  for (std::size_t i = 0; i < n; ++i) {
    ratio_ok[i] = set[i].ratio_score >= params.si_ratio_init;
    any_ratio |= ratio_ok[i] != 0;
  }
  std::vector<double> scores(n, 0.0);
  if (!any_ratio)
    return finalize("si", {}, std::move(scores), timer);

  std::vector<Point3> source_positions(n);
  for (std::size_t i = 0; i < n; ++i)
    source_positions[i] = set[i].source.position;
  NeighborIndex source_index(source_positions);

  const auto global_voters = top_by_ratio(set, kappa);

  for (std::size_t i = 0; i < n; ++i) {
    // Local stage: the kappa nearest correspondences by source-keypoint
    // distance, intersected with the ratio-test survivors.
    auto nbrs = source_index.knn(set[i].source.position,
                                 std::min(kappa + 1, n));
    std::size_t local_count = 0, local_votes = 0;
    std::size_t taken = 0;
    for (const auto& nb : nbrs) {
      if (nb.index == i) continue;
      if (taken == kappa) break;
      ++taken;
      if (!ratio_ok[nb.index]) continue;
      ++local_count;
      if (rigidity_ratio(set[i], set[nb.index]) > params.varsigma) ++local_votes;
    }

    // Global stage: rigid transform aligning the source LRF of c onto its
    // target LRF, checked against each global voter's endpoints.
    const LRF& ls = lookup_lrf(ctx.source_lrfs, set[i].source.cloud_index);
    const LRF& lt = lookup_lrf(ctx.target_lrfs, set[i].target.cloud_index);
    const Eigen::Matrix3d rot = lt.axes.transpose() * ls.axes;
    const Eigen::Vector3d trans =
        set[i].target.position - rot * set[i].source.position;

    std::size_t global_count = 0, global_votes = 0;
    for (std::size_t g : global_voters) {
      if (g == i) continue;
      ++global_count;
      if (rigidity_ratio(set[i], set[g]) <= params.varsigma) continue;
      const double residual =
          (rot * set[g].source.position + trans - set[g].target.position).norm();
      if (residual < delta) ++global_votes;
    }

    const std::size_t denom = local_count + global_count;
    scores[i] = denom == 0 ? 0.0
                           : static_cast<double>(local_votes + global_votes) /
                                 static_cast<double>(denom);
  }

  auto selected = select_above_otsu(scores);
  return finalize("si", std::move(selected), std::move(scores), timer);
}

GroupingResult group_cv(const CorrespondenceSet& set, const GrouperParams& params,
                        const GroupingContext& ctx) {
  Timer timer;
  const std::size_t n = set.size();
  if (n < 2) throw std::invalid_argument("group_cv: need >= 2 correspondences");
  require_lrfs(set, ctx);
  const double pr = require_pr(ctx, "group_cv");
  const double delta_r = params.delta_r_pr * pr;
  const double delta_l = params.delta_l_deg;

  const auto voters = top_by_ratio(set, static_cast<std::size_t>(params.k_cv));

  std::vector<const LRF*> src_lrf(n), tgt_lrf(n);
  for (std::size_t i = 0; i < n; ++i) {
    src_lrf[i] = &lookup_lrf(ctx.source_lrfs, set[i].source.cloud_index);
    tgt_lrf[i] = &lookup_lrf(ctx.target_lrfs, set[i].target.cloud_index);
  }

  std::vector<double> scores(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t v : voters) {
      if (v == i) continue;
      const double rd = rigidity_diff(set[i], set[v]);
      const double angle_diff =
          std::abs(lrf_angle_deg(*src_lrf[i], *src_lrf[v]) -
                   lrf_angle_deg(*tgt_lrf[i], *tgt_lrf[v]));
      s += std::exp(-(rd * rd) / (delta_r * delta_r) -
                    (angle_diff * angle_diff) / (delta_l * delta_l));
    }
    scores[i] = s;
  }

  auto selected = params.t_cv_adaptive
                      ? select_above_otsu(scores)
                      : select_above_fixed(scores, params.t_cv_fixed);
  return finalize("cv", std::move(selected), std::move(scores), timer);
}

// ---- Group-based methods ------------------------------------------------------

RansacOutcome run_ransac(const CorrespondenceSet& set, const GrouperParams& params,
                         const GroupingContext& ctx) {
  Timer timer;
  const std::size_t n = set.size();
  if (n < 3)
    throw std::invalid_argument("group_ransac: need >= 3 correspondences");
  const double threshold = params.d_ransac_pr * require_pr(ctx, "group_ransac");
  const double threshold2 = threshold * threshold;

  Rng rng(params.rng_seed);
  RansacOutcome outcome;
  int best_count = -1;
  RigidTransform best;

  std::pair<Point3, Point3> sample[3];
  for (int iter = 0; iter < params.n_ransac; ++iter) {
    const std::size_t i0 = rng.below(n);
    std::size_t i1 = rng.below(n);
    while (i1 == i0) i1 = rng.below(n);
    std::size_t i2 = rng.below(n);
    while (i2 == i0 || i2 == i1) i2 = rng.below(n);

    sample[0] = {set[i0].source.position, set[i0].target.position};
    sample[1] = {set[i1].source.position, set[i1].target.position};
    sample[2] = {set[i2].source.position, set[i2].target.position};

    RigidTransform hypothesis;
    try {
      hypothesis = estimate_rigid_transform(std::span(sample, 3));
    } catch (const std::runtime_error&) {
      continue;  // degenerate sample
    }

    int count = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double r2 =
          (hypothesis.apply(set[j].source.position) - set[j].target.position)
              .squaredNorm();
      if (r2 < threshold2) ++count;
    }
    if (count > best_count) {  // first maximum wins
      best_count = count;
      best = hypothesis;
    }
  }

  std::vector<double> scores(n, 0.0);
  std::vector<std::size_t> selected;
  if (best_count >= 0) {
    outcome.found = true;
    outcome.transform = best;
    outcome.inlier_count = best_count;
    for (std::size_t j = 0; j < n; ++j) {
      const double r2 =
          (best.apply(set[j].source.position) - set[j].target.position)
              .squaredNorm();
      if (r2 < threshold2) {
        scores[j] = 1.0;
        selected.push_back(j);
      }
    }
  }
  outcome.result =
      finalize("ransac", std::move(selected), std::move(scores), timer);
  return outcome;
}

GroupingResult group_ransac(const CorrespondenceSet& set,
                            const GrouperParams& params,
                            const GroupingContext& ctx) {
  return run_ransac(set, params, ctx).result;
}

Eigen::VectorXd principal_eigenvector(const Eigen::MatrixXd& m,
                                      int max_iterations, double tolerance) {
  const Eigen::Index n = m.rows();
  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(double(n)));
  for (int iter = 0; iter < max_iterations; ++iter) {
    Eigen::VectorXd w = m * v;
    const double norm = w.norm();
    if (norm < 1e-300) break;  // M annihilates v; keep the current iterate
    w /= norm;
    const double delta = (w - v).cwiseAbs().maxCoeff();
    v = std::move(w);
    if (delta < tolerance) break;
  }
  return v;
}

GroupingResult group_st(const CorrespondenceSet& set, const GrouperParams& params,
                        const GroupingContext&) {
  Timer timer;
  const std::size_t n = set.size();
  if (n == 0) throw std::invalid_argument("group_st: need >= 1 correspondence");

  Eigen::MatrixXd affinity = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double r = rigidity_ratio(set[i], set[j]);
      if (r >= params.t_st) {
        affinity(i, j) = r;
        affinity(j, i) = r;
      }
    }
  }

  const Eigen::VectorXd v = principal_eigenvector(affinity);
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) scores[i] = std::abs(v(i));

  // Greedy conflict-aware selection: accept the best remaining candidate and
  // permanently exclude everything sharing one of its keypoints.
  std::vector<char> excluded(n, 0);
  std::vector<std::size_t> selected;
  for (;;) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (excluded[i]) continue;
      if (best == n || scores[i] > scores[best]) best = i;
    }
    if (best == n || scores[best] <= 0.0) break;
    selected.push_back(best);
    excluded[best] = 1;
    for (std::size_t j = 0; j < n; ++j) {
      if (excluded[j]) continue;
      if (same_keypoint(set[best].source, set[j].source) ||
          same_keypoint(set[best].target, set[j].target))
        excluded[j] = 1;
    }
  }
  return finalize("st", std::move(selected), std::move(scores), timer);
}

GroupingResult group_gc(const CorrespondenceSet& set, const GrouperParams& params,
                        const GroupingContext& ctx) {
  Timer timer;
  const std::size_t n = set.size();
  if (n == 0) throw std::invalid_argument("group_gc: need >= 1 correspondence");
  const double threshold = params.t_gc_pr * require_pr(ctx, "group_gc");

  std::vector<int> cluster_size(n, 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < n; ++i) {
    int size = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (rigidity_diff(set[i], set[j]) < threshold) ++size;
    cluster_size[i] = size;
    if (size > cluster_size[best]) best = i;  // ties keep the lower index
  }

  std::vector<std::size_t> selected;
  for (std::size_t j = 0; j < n; ++j)
    if (rigidity_diff(set[best], set[j]) < threshold) selected.push_back(j);

  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i)
    scores[i] = static_cast<double>(cluster_size[i]) / static_cast<double>(n);
  return finalize("gc", std::move(selected), std::move(scores), timer);
}

GroupingResult group_3dhv(const CorrespondenceSet& set,
                          const GrouperParams& params,
                          const GroupingContext& ctx) {
  Timer timer;
  const std::size_t n = set.size();
  if (n == 0) throw std::invalid_argument("group_3dhv: need >= 1 correspondence");
  if (ctx.source_cloud == nullptr || ctx.target_cloud == nullptr ||
      ctx.source_cloud->size() == 0 || ctx.target_cloud->size() == 0)
    throw std::runtime_error("context incomplete");
  require_lrfs(set, ctx);
  const double bin = params.hough_bin_pr * require_pr(ctx, "group_3dhv");

  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : ctx.source_cloud->points) centroid += p;
  centroid /= static_cast<double>(ctx.source_cloud->size());

  Eigen::Vector3d min_corner = ctx.target_cloud->points.front();
  for (const auto& p : ctx.target_cloud->points) min_corner = min_corner.cwiseMin(p);

  using Cell = std::array<std::int64_t, 3>;
  std::vector<Cell> cells(n);
  std::map<Cell, int> votes;  // ordered: iteration is lexicographic
  for (std::size_t i = 0; i < n; ++i) {
    const LRF& ls = lookup_lrf(ctx.source_lrfs, set[i].source.cloud_index);
    const LRF& lt = lookup_lrf(ctx.target_lrfs, set[i].target.cloud_index);
    const Eigen::Vector3d global_src = centroid - set[i].source.position;
    const Eigen::Vector3d local = ls.axes * global_src;
    const Eigen::Vector3d vote =
        lt.axes.transpose() * local + set[i].target.position;
    Cell cell;
    for (int a = 0; a < 3; ++a)
      cell[a] = static_cast<std::int64_t>(
          std::floor((vote[a] - min_corner[a]) / bin));
    cells[i] = cell;
    ++votes[cell];
  }

  // Peak by count; equal counts resolve to the lexicographically smallest
  // cell, which is simply the first one in map order.
  Cell peak{};
  int peak_count = 0;
  for (const auto& [cell, count] : votes) {
    if (count > peak_count) {
      peak = cell;
      peak_count = count;
    }
  }

  auto in_selection = [&](const Cell& cell) {
    if (cell == peak) return true;
    if (!params.hough_include_neighbors) return false;
    for (int a = 0; a < 3; ++a)
      if (std::llabs(cell[a] - peak[a]) > 1) return false;
    return true;
  };

  std::vector<std::size_t> selected;
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = static_cast<double>(votes.at(cells[i])) /
                static_cast<double>(peak_count);
    if (in_selection(cells[i])) selected.push_back(i);
  }
  return finalize("3dhv", std::move(selected), std::move(scores), timer);
}

ReplicatorResult replicator_dynamics(const Eigen::MatrixXd& payoff, int max_steps,
                                     bool record_trajectory,
                                     const Eigen::VectorXd* start) {
  const Eigen::Index n = payoff.rows();
  ReplicatorResult result;
  Eigen::VectorXd x = start != nullptr
                          ? *start
                          : Eigen::VectorXd::Constant(n, 1.0 / double(n));
  if (record_trajectory) result.trajectory.push_back(x);
  for (int step = 0; step < max_steps; ++step) {
    const Eigen::VectorXd px = payoff * x;
    const double mean_payoff = x.dot(px);
    if (mean_payoff < 1e-15) break;
    Eigen::VectorXd next = x.cwiseProduct(px) / mean_payoff;
    const double delta = (next - x).cwiseAbs().maxCoeff();
    x = std::move(next);
    ++result.steps_run;
    if (record_trajectory) result.trajectory.push_back(x);
    if (delta < 1e-12) break;
  }
  result.final = std::move(x);
  return result;
}

GroupingResult group_gtm(const CorrespondenceSet& set, const GrouperParams& params,
                         const GroupingContext&) {
  Timer timer;
  const std::size_t n = set.size();
  if (n < 2) throw std::invalid_argument("group_gtm: need >= 2 correspondences");

  Eigen::MatrixXd payoff = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double r = rigidity_ratio(set[i], set[j]);
      payoff(i, j) = r;
      payoff(j, i) = r;
    }
  }

  Eigen::VectorXd start = Eigen::VectorXd::Constant(n, 1.0 / double(n));
  if (params.gtm_jitter_start) {
    Rng rng(params.rng_seed);
    for (Eigen::Index i = 0; i < start.size(); ++i)
      start(i) *= 1.0 + 0.01 * rng.uniform();
    start /= start.sum();
  }

  const auto dynamics =
      replicator_dynamics(payoff, params.n_gtm, false, &start);
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) scores[i] = dynamics.final(i);

  auto selected = params.t_gtm_adaptive
                      ? select_above_otsu(scores)
                      : select_above_fixed(scores, params.t_gtm_fixed);
  return finalize("gtm", std::move(selected), std::move(scores), timer);
}

GroupingResult run_grouper(std::string_view method, const CorrespondenceSet& set,
                           const GrouperParams& params,
                           const GroupingContext& ctx) {
  if (method == "ss") return group_ss(set, params, ctx);
  if (method == "nnsr") return group_nnsr(set, params, ctx);
  if (method == "st") return group_st(set, params, ctx);
  if (method == "ransac") return group_ransac(set, params, ctx);
  if (method == "gc") return group_gc(set, params, ctx);
  if (method == "3dhv") return group_3dhv(set, params, ctx);
  if (method == "gtm") return group_gtm(set, params, ctx);
  if (method == "si") return group_si(set, params, ctx);
  if (method == "cv") return group_cv(set, params, ctx);
  std::string names;
  for (std::size_t i = 0; i < kMethodNames.size(); ++i) {
    if (i) names += ", ";
    names += kMethodNames[i];
  }
  throw std::invalid_argument("unknown method '" + std::string(method) +
                              "'; valid methods: " + names);
}

}  // namespace cgbench
