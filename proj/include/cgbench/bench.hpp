#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cgbench/features.hpp"
#include "cgbench/geometry.hpp"
#include "cgbench/groupers.hpp"
#include "cgbench/synthdata.hpp"

namespace cgbench {

/// Eq.-18-style inlier test: label_i = (||gt·p_i - p'_i|| <= eps).
std::vector<bool> label_ground_truth(const CorrespondenceSet& set,
                                     const RigidTransform& gt, double eps);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double fscore = 0.0;
};

/// Precision/recall/F-score of a selected index list against labels.
/// Empty selection scores (0, 0, 0); with no ground-truth inliers, recall is
/// 1 for an empty selection and 0 otherwise.
Prf score(std::span<const std::size_t> selected, const std::vector<bool>& labels);

/// Registration proxy: precision strictly greater than tau_reg.
bool registration_success(double precision, double tau_reg);

struct TransformError {
  double rot_deg = 0.0;
  double trans = 0.0;
};
TransformError transform_error(const RigidTransform& est, const RigidTransform& gt);

/// How benchmark pairs are produced.
struct BenchGenerator {
  std::string type = "synthetic";  // "synthetic" | "pipeline" | "files"

  // synthetic (direct correspondence fabrication)
  int n = 1000;
  double inlier_ratio = 0.1;
  double pos_sigma_pr = 0.5;
  double extent = 1.0;
  ScoreModel scores;
  double lrf_jitter_deg = 0.0;

  // pipeline (shape cloud -> perturb -> detect/describe/match)
  int cloud_points = 10000;
  double nms_radius_pr = 6.0;
  double detect_support_pr = 5.0;
  double support_radius_pr = 15.0;
  std::string descriptor = "ref";  // "ref" | "oracle"
  double corrupt_prob = 0.0;
  double oracle_noise = 0.05;
  int oracle_dim = 16;

  // files (user-supplied clouds + ground truth, matched with the pipeline)
  struct FilePair {
    std::string source, target, pose;
  };
  std::vector<FilePair> pairs;
};

struct BenchConfig {
  std::vector<std::string> methods;
  std::string nuisance = "none";
  // Level semantics by nuisance: noise -> sigma_pr, density -> keep_ratio,
  // overlap -> target overlap, inlier_ratio -> ratio, epsilon -> eps_pr,
  // n_matches -> synthetic n, nms_radius -> detector radius in pr,
  // corruption -> oracle corrupt_prob, clutter/occlusion -> their fractions,
  // none -> single dummy level.
  std::vector<double> levels = {0.0};
  double epsilon_pr = 5.0;
  double tau_reg = 0.1;
  int repetitions = 1;
  std::uint64_t rng_seed = 0;
  int jobs = 1;
  GrouperParams params;
  BenchGenerator generator;
  std::string out_prefix;  // writes <prefix>.csv / .json / .md when set
};

struct PairResult {
  std::string method;
  std::string nuisance;
  double level = 0.0;
  std::uint64_t seed = 0;
  int n_corr = 0;
  int n_inliers = 0;
  double inlier_ratio = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double fscore = 0.0;
  bool reg_success = false;
  double elapsed_s = 0.0;
  std::string note;  // error note for failed method runs (JSON report only)
};

struct AggregateRow {
  std::string method;
  double level = 0.0;
  int n_pairs = 0;
  int n_failures = 0;
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  double mean_fscore = 0.0;
  double success_rate = 0.0;
  double median_elapsed_s = 0.0;
};

struct Report {
  BenchConfig config;
  std::vector<PairResult> rows;
  std::vector<AggregateRow> aggregates;
};

/// One fully prepared matching pair ready for grouping. Call context() only
/// after the struct has reached its final resting place (the returned
/// GroupingContext points at the clouds held here).
struct BenchPair {
  PointCloud source;
  PointCloud target;
  RigidTransform gt;
  CorrespondenceSet set;
  std::vector<bool> labels;
  double pr = 0.0;
  std::unordered_map<int, LRF> source_lrfs;
  std::unordered_map<int, LRF> target_lrfs;

  GroupingContext context() const;
};

/// Builds and labels the pair for one (level, repetition) cell; exposed for
/// tests. The "epsilon" nuisance overrides config.epsilon_pr with the level
/// when labeling.
BenchPair make_bench_pair(const BenchConfig& config, double level,
                          std::uint64_t cell_seed);

/// Runs every configured method on every (level, repetition) cell. Timing is
/// one warmup plus the median of three timed runs; metric fields are
/// deterministic under (config, rng_seed), elapsed_s is not. Method errors
/// are recorded as (0, 0, 0, failure) rows and the run continues. Writes
/// CSV/JSON/markdown when config.out_prefix is set.
Report run_benchmark(const BenchConfig& config);

std::vector<AggregateRow> aggregate(std::span<const PairResult> rows,
                                    std::span<const std::string> method_order,
                                    std::span<const double> level_order);
/// Aggregation with orderings inferred from the rows (first appearance).
std::vector<AggregateRow> aggregate(std::span<const PairResult> rows);

// CSV columns, exact order:
// method,nuisance,level,seed,n_corr,n_inliers,inlier_ratio,precision,recall,
// fscore,reg_success,elapsed_s
void write_csv(std::ostream& out, std::span<const PairResult> rows);
void write_csv(const std::filesystem::path& path, std::span<const PairResult> rows);
std::vector<PairResult> read_csv(std::istream& in);
std::vector<PairResult> read_csv(const std::filesystem::path& path);

void write_report_json(std::ostream& out, const Report& report);
void write_report_json(const std::filesystem::path& path, const Report& report);
void write_markdown(std::ostream& out, const Report& report);
void write_markdown(const std::filesystem::path& path, const Report& report);

// BenchConfig JSON (config files and the report echo).
BenchConfig load_bench_config(std::istream& in);
BenchConfig load_bench_config(const std::filesystem::path& path);
std::string bench_config_to_json(const BenchConfig& config);

}  // namespace cgbench
