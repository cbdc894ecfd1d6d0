#include "cgbench/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "cgbench/io.hpp"
#include "cgbench/kdtree.hpp"
#include "cgbench/rng.hpp"

namespace cgbench {

namespace {

using nlohmann::json;

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

std::vector<bool> label_ground_truth(const CorrespondenceSet& set,
                                     const RigidTransform& gt, double eps) {
  if (!(eps > 0.0))
    throw std::invalid_argument("label_ground_truth: eps must be positive");
  std::vector<bool> labels(set.size());
  for (std::size_t i = 0; i < set.size(); ++i)
    labels[i] =
        (gt.apply(set[i].source.position) - set[i].target.position).norm() <=
        eps;
  return labels;
}

Prf score(std::span<const std::size_t> selected, const std::vector<bool>& labels) {
  std::size_t total_inliers = 0;
  for (bool l : labels)
    if (l) ++total_inliers;
  std::size_t true_positives = 0;
  for (std::size_t idx : selected) {
    if (idx >= labels.size())
      throw std::invalid_argument("score: selected index out of bounds");
    if (labels[idx]) ++true_positives;
  }

  Prf out;
  out.precision = selected.empty() ? 0.0
                                   : static_cast<double>(true_positives) /
                                         static_cast<double>(selected.size());
  if (total_inliers > 0)
    out.recall = static_cast<double>(true_positives) /
                 static_cast<double>(total_inliers);
  else
    out.recall = selected.empty() ? 1.0 : 0.0;
  out.fscore = (out.precision + out.recall) > 0.0
                   ? 2.0 * out.precision * out.recall /
                         (out.precision + out.recall)
                   : 0.0;
  return out;
}

bool registration_success(double precision, double tau_reg) {
  return precision > tau_reg;
}

TransformError transform_error(const RigidTransform& est, const RigidTransform& gt) {
  TransformError out;
  out.rot_deg = rotation_angle_deg(est.rotation * gt.rotation.transpose());
  out.trans = (est.translation - gt.translation).norm();
  return out;
}

GroupingContext BenchPair::context() const {
  GroupingContext ctx;
  ctx.source_cloud = &source;
  ctx.target_cloud = &target;
  ctx.pr = pr;
  ctx.source_lrfs = source_lrfs;
  ctx.target_lrfs = target_lrfs;
  return ctx;
}

namespace {

void validate_config(const BenchConfig& cfg) {
  if (cfg.methods.empty())
    throw std::invalid_argument("bench config: no methods configured");
  for (const auto& m : cfg.methods) {
    if (std::find(kMethodNames.begin(), kMethodNames.end(), m) ==
        kMethodNames.end()) {
      std::string names;
      for (std::size_t i = 0; i < kMethodNames.size(); ++i) {
        if (i) names += ", ";
        names += kMethodNames[i];
      }
      throw std::invalid_argument("bench config: unknown method '" + m +
                                  "'; valid methods: " + names);
    }
  }
  if (cfg.levels.empty())
    throw std::invalid_argument("bench config: no nuisance levels");
  if (cfg.repetitions < 1)
    throw std::invalid_argument("bench config: repetitions must be >= 1");
  if (!(cfg.epsilon_pr > 0.0))
    throw std::invalid_argument("bench config: epsilon_pr must be positive");
  if (!(cfg.tau_reg > 0.0) || cfg.tau_reg > 1.0)
    throw std::invalid_argument("bench config: tau_reg must be in (0,1]");
  if (cfg.jobs < 1)
    throw std::invalid_argument("bench config: jobs must be >= 1");
}

BenchPair make_synthetic_pair(const BenchConfig& cfg, double level,
                              std::uint64_t cell_seed) {
  const auto& g = cfg.generator;
  int n = g.n;
  double ratio = g.inlier_ratio;
  double pos_sigma = g.pos_sigma_pr;
  double jitter = g.lrf_jitter_deg;
  if (cfg.nuisance == "inlier_ratio")
    ratio = level;
  else if (cfg.nuisance == "n_matches")
    n = static_cast<int>(level);
  else if (cfg.nuisance == "pos_noise")
    pos_sigma = level;
  else if (cfg.nuisance == "lrf_jitter")
    jitter = level;

  Rng rng(mix64(cell_seed, 0x67656e31ull));
  const RigidTransform gt = random_rigid_transform(rng, g.extent);
  auto data = synth_correspondences(n, ratio, gt, pos_sigma, g.extent,
                                    mix64(cell_seed, 0x67656e32ull), g.scores,
                                    jitter);

  BenchPair pair;
  pair.source = std::move(data.source);
  pair.target = std::move(data.target);
  pair.gt = data.gt;
  pair.set = std::move(data.set);
  pair.pr = data.pr;
  pair.source_lrfs = std::move(data.source_lrfs);
  pair.target_lrfs = std::move(data.target_lrfs);
  return pair;
}

struct DescribedKeypoints {
  std::vector<Keypoint> keypoints;
  std::vector<Feature> features;
};

DescribedKeypoints describe_all(const PointCloud& cloud,
                                const NeighborIndex& index,
                                std::vector<Keypoint> keypoints,
                                double support_radius,
                                const std::string& descriptor,
                                const RigidTransform& oracle_gt,
                                double corrupt_prob, double oracle_noise,
                                int oracle_dim, std::uint64_t oracle_seed) {
  DescribedKeypoints out;
  for (auto& kp : keypoints) {
    LRF lrf;
    try {
      lrf = compute_lrf(cloud, index, kp.position, support_radius);
    } catch (const std::runtime_error&) {
      continue;  // not enough support for a frame; drop the keypoint
    }
    kp.lrf = lrf;
    Feature f;
    if (descriptor == "oracle") {
      f = oracle_describe(kp, oracle_gt, corrupt_prob, oracle_noise, oracle_dim,
                          oracle_seed);
    } else {
      try {
        f = describe(cloud, index, kp, support_radius);
      } catch (const std::runtime_error&) {
        continue;
      }
    }
    out.keypoints.push_back(std::move(kp));
    out.features.push_back(std::move(f));
  }
  return out;
}

BenchPair make_pipeline_pair(const BenchConfig& cfg, double level,
                             std::uint64_t cell_seed) {
  const auto& g = cfg.generator;
  PointCloud source = make_shape_cloud(g.cloud_points, mix64(cell_seed, 0x73686170ull));
  Rng rng(mix64(cell_seed, 0x67747278ull));
  const RigidTransform gt = random_rigid_transform(rng, 2.0);

  PointCloud target;
  if (cfg.nuisance == "overlap") {
    auto partial = make_partial_pair(source, level, gt, mix64(cell_seed, 0x6f76ull));
    source = std::move(partial.source);
    target = std::move(partial.target);
  } else if (cfg.nuisance == "clutter" || cfg.nuisance == "occlusion") {
    const double clutter = cfg.nuisance == "clutter" ? level : 0.5;
    const double occlusion = cfg.nuisance == "occlusion" ? level : 0.3;
    auto scene =
        compose_clutter_scene(source, clutter, occlusion, gt, mix64(cell_seed, 0x636cull));
    target = std::move(scene.pair.target);
  } else {
    target = apply_transform(source, gt);
    if (cfg.nuisance == "noise" && level > 0.0)
      target = add_gaussian_noise(target, level, mix64(cell_seed, 0x6e6full));
    else if (cfg.nuisance == "density" && level < 1.0)
      target = downsample_random(target, level, mix64(cell_seed, 0x646eull));
  }

  BenchPair pair;
  pair.gt = gt;
  pair.source = std::move(source);
  pair.target = std::move(target);
  pair.pr = pair.source.resolution();

  const double nms =
      (cfg.nuisance == "nms_radius" ? level : g.nms_radius_pr) * pair.pr;
  const double detect_support = g.detect_support_pr * pair.pr;
  const double support = g.support_radius_pr * pair.pr;
  const double corrupt =
      cfg.nuisance == "corruption" ? level : g.corrupt_prob;

  NeighborIndex source_index(pair.source);
  NeighborIndex target_index(pair.target);
  auto source_kps =
      detect_keypoints(pair.source, source_index, nms, detect_support);
  auto target_kps =
      detect_keypoints(pair.target, target_index, nms, detect_support);

  const std::uint64_t oracle_seed = mix64(cfg.rng_seed, 0x6f7261636cull);
  auto src = describe_all(pair.source, source_index, std::move(source_kps),
                          support, g.descriptor, gt, corrupt, g.oracle_noise,
                          g.oracle_dim, oracle_seed);
  auto tgt = describe_all(pair.target, target_index, std::move(target_kps),
                          support, g.descriptor, RigidTransform{}, corrupt,
                          g.oracle_noise, g.oracle_dim, oracle_seed);

  pair.set = match_features(src.features, tgt.features, src.keypoints,
                            tgt.keypoints);
  for (const auto& kp : src.keypoints) pair.source_lrfs.emplace(kp.cloud_index, *kp.lrf);
  for (const auto& kp : tgt.keypoints) pair.target_lrfs.emplace(kp.cloud_index, *kp.lrf);
  return pair;
}

BenchPair make_files_pair(const BenchConfig& cfg, double level,
                          std::uint64_t cell_seed) {
  const auto& g = cfg.generator;
  if (g.pairs.empty())
    throw std::invalid_argument("bench config: generator type 'files' needs pairs");
  // The level indexes into the configured pair list.
  const auto idx = static_cast<std::size_t>(level);
  if (idx >= g.pairs.size())
    throw std::invalid_argument("bench config: pair index out of range");
  const auto& spec = g.pairs[idx];

  BenchPair pair;
  pair.source = load_ply(std::filesystem::path(spec.source));
  pair.target = load_ply(std::filesystem::path(spec.target));
  const auto poses = load_poses(std::filesystem::path(spec.pose));
  if (poses.empty()) throw std::runtime_error(spec.pose + ": no pose");
  pair.gt = poses.front();
  pair.pr = pair.source.resolution();

  const double nms = g.nms_radius_pr * pair.pr;
  const double detect_support = g.detect_support_pr * pair.pr;
  const double support = g.support_radius_pr * pair.pr;

  NeighborIndex source_index(pair.source);
  NeighborIndex target_index(pair.target);
  auto src = describe_all(pair.source, source_index,
                          detect_keypoints(pair.source, source_index, nms,
                                           detect_support),
                          support, g.descriptor, pair.gt, g.corrupt_prob,
                          g.oracle_noise, g.oracle_dim,
                          mix64(cell_seed, 0x6f7261636cull));
  auto tgt = describe_all(pair.target, target_index,
                          detect_keypoints(pair.target, target_index, nms,
                                           detect_support),
                          support, g.descriptor, RigidTransform{},
                          g.corrupt_prob, g.oracle_noise, g.oracle_dim,
                          mix64(cell_seed, 0x6f7261636cull));
  pair.set = match_features(src.features, tgt.features, src.keypoints,
                            tgt.keypoints);
  for (const auto& kp : src.keypoints) pair.source_lrfs.emplace(kp.cloud_index, *kp.lrf);
  for (const auto& kp : tgt.keypoints) pair.target_lrfs.emplace(kp.cloud_index, *kp.lrf);
  return pair;
}

}  // namespace

BenchPair make_bench_pair(const BenchConfig& cfg, double level,
                          std::uint64_t cell_seed) {
  BenchPair pair;
  const auto& type = cfg.generator.type;
  if (type == "synthetic")
    pair = make_synthetic_pair(cfg, level, cell_seed);
  else if (type == "pipeline")
    pair = make_pipeline_pair(cfg, level, cell_seed);
  else if (type == "files")
    pair = make_files_pair(cfg, level, cell_seed);
  else
    throw std::invalid_argument("bench config: unknown generator type '" +
                                type + "'");

  const double eps_pr = cfg.nuisance == "epsilon" ? level : cfg.epsilon_pr;
  pair.labels = label_ground_truth(pair.set, pair.gt, eps_pr * pair.pr);
  return pair;
}

namespace {

double median3(double a, double b, double c) {
  return std::max(std::min(a, b), std::min(std::max(a, b), c));
}

}  // namespace

Report run_benchmark(const BenchConfig& cfg) {
  validate_config(cfg);

  struct Cell {
    std::size_t level_idx;
    int rep;
  };
  std::vector<Cell> cells;
  for (std::size_t li = 0; li < cfg.levels.size(); ++li)
    for (int rep = 0; rep < cfg.repetitions; ++rep) cells.push_back({li, rep});

  std::vector<std::vector<PairResult>> cell_rows(cells.size());

  auto run_cell = [&](std::size_t ci) {
    const Cell& cell = cells[ci];
    const double level = cfg.levels[cell.level_idx];
    const std::uint64_t cell_seed =
        mix64(mix64(cfg.rng_seed, cell.level_idx), static_cast<std::uint64_t>(cell.rep));

    auto& rows = cell_rows[ci];
    auto base_row = [&](const std::string& method) {
      PairResult r;
      r.method = method;
      r.nuisance = cfg.nuisance;
      r.level = level;
      r.seed = cell_seed;
      return r;
    };

    BenchPair pair;
    try {
      pair = make_bench_pair(cfg, level, cell_seed);
    } catch (const std::exception& e) {
      for (const auto& m : cfg.methods) {
        PairResult r = base_row(m);
        r.note = std::string("pair generation failed: ") + e.what();
        rows.push_back(std::move(r));
      }
      return;
    }

    const GroupingContext ctx = pair.context();
    int n_inliers = 0;
    for (bool l : pair.labels)
      if (l) ++n_inliers;

    for (const auto& m : cfg.methods) {
      PairResult row = base_row(m);
      row.n_corr = static_cast<int>(pair.set.size());
      row.n_inliers = n_inliers;
      row.inlier_ratio = pair.set.empty()
                             ? 0.0
                             : static_cast<double>(n_inliers) /
                                   static_cast<double>(pair.set.size());
      GrouperParams params = cfg.params;
      params.rng_seed = cell_seed;
      try {
        // One warmup, then the median of three timed runs; the runs are
        // identical, so metrics come from the last.
        run_grouper(m, pair.set, params, ctx);
        const GroupingResult r1 = run_grouper(m, pair.set, params, ctx);
        const GroupingResult r2 = run_grouper(m, pair.set, params, ctx);
        const GroupingResult r3 = run_grouper(m, pair.set, params, ctx);
        row.elapsed_s = median3(r1.elapsed_s, r2.elapsed_s, r3.elapsed_s);
        const Prf prf = score(r3.selected, pair.labels);
        row.precision = prf.precision;
        row.recall = prf.recall;
        row.fscore = prf.fscore;
        row.reg_success = registration_success(prf.precision, cfg.tau_reg);
      } catch (const std::exception& e) {
        row.precision = row.recall = row.fscore = 0.0;
        row.reg_success = false;
        row.note = e.what();
      }
      rows.push_back(std::move(row));
    }
  };

  if (cfg.jobs <= 1) {
    for (std::size_t ci = 0; ci < cells.size(); ++ci) run_cell(ci);
  } else {
    std::atomic<std::size_t> next{0};
    const int n_threads =
        std::min<std::size_t>(cfg.jobs, cells.size());
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t)
      pool.emplace_back([&]() {
        for (;;) {
          const std::size_t ci = next.fetch_add(1);
          if (ci >= cells.size()) return;
          run_cell(ci);
        }
      });
    for (auto& th : pool) th.join();
  }

  Report report;
  report.config = cfg;
  for (auto& rows : cell_rows)
    for (auto& r : rows) report.rows.push_back(std::move(r));
  report.aggregates = aggregate(report.rows, cfg.methods, cfg.levels);

  if (!cfg.out_prefix.empty()) {
    write_csv(std::filesystem::path(cfg.out_prefix + ".csv"), report.rows);
    write_report_json(std::filesystem::path(cfg.out_prefix + ".json"), report);
    write_markdown(std::filesystem::path(cfg.out_prefix + ".md"), report);
  }
  return report;
}

std::vector<AggregateRow> aggregate(std::span<const PairResult> rows,
                                    std::span<const std::string> method_order,
                                    std::span<const double> level_order) {
  std::vector<AggregateRow> out;
  for (const auto& method : method_order) {
    for (double level : level_order) {
      AggregateRow agg;
      agg.method = method;
      agg.level = level;
      std::vector<double> elapsed;
      double sp = 0, sr = 0, sf = 0;
      int successes = 0;
      for (const auto& row : rows) {
        if (row.method != method || row.level != level) continue;
        ++agg.n_pairs;
        if (!row.note.empty()) ++agg.n_failures;
        sp += row.precision;
        sr += row.recall;
        sf += row.fscore;
        if (row.reg_success) ++successes;
        elapsed.push_back(row.elapsed_s);
      }
      if (agg.n_pairs == 0) continue;
      const double n = agg.n_pairs;
      agg.mean_precision = sp / n;
      agg.mean_recall = sr / n;
      agg.mean_fscore = sf / n;
      agg.success_rate = successes / n;
      std::sort(elapsed.begin(), elapsed.end());
      agg.median_elapsed_s =
          elapsed.size() % 2 == 1
              ? elapsed[elapsed.size() / 2]
              : 0.5 * (elapsed[elapsed.size() / 2 - 1] + elapsed[elapsed.size() / 2]);
      out.push_back(std::move(agg));
    }
  }
  return out;
}

std::vector<AggregateRow> aggregate(std::span<const PairResult> rows) {
  std::vector<std::string> methods;
  std::vector<double> levels;
  for (const auto& row : rows) {
    if (std::find(methods.begin(), methods.end(), row.method) == methods.end())
      methods.push_back(row.method);
    if (std::find(levels.begin(), levels.end(), row.level) == levels.end())
      levels.push_back(row.level);
  }
  return aggregate(rows, methods, levels);
}

// ---- CSV ---------------------------------------------------------------------

static const char* kCsvHeader =
    "method,nuisance,level,seed,n_corr,n_inliers,inlier_ratio,precision,"
    "recall,fscore,reg_success,elapsed_s";

void write_csv(std::ostream& out, std::span<const PairResult> rows) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.method << ',' << r.nuisance << ',' << format_real(r.level) << ','
        << r.seed << ',' << r.n_corr << ',' << r.n_inliers << ','
        << format_real(r.inlier_ratio) << ',' << format_real(r.precision) << ','
        << format_real(r.recall) << ',' << format_real(r.fscore) << ','
        << (r.reg_success ? 1 : 0) << ',' << format_real(r.elapsed_s) << '\n';
  }
}

void write_csv(const std::filesystem::path& path, std::span<const PairResult> rows) {
  auto out = open_output(path);
  write_csv(out, rows);
}

std::vector<PairResult> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: empty input");
  if (line != kCsvHeader) throw std::runtime_error("csv: unexpected header");

  std::vector<PairResult> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 12)
      throw std::runtime_error("csv line " + std::to_string(lineno) +
                               ": expected 12 fields");
    PairResult r;
    r.method = fields[0];
    r.nuisance = fields[1];
    r.level = std::stod(fields[2]);
    r.seed = std::stoull(fields[3]);
    r.n_corr = std::stoi(fields[4]);
    r.n_inliers = std::stoi(fields[5]);
    r.inlier_ratio = std::stod(fields[6]);
    r.precision = std::stod(fields[7]);
    r.recall = std::stod(fields[8]);
    r.fscore = std::stod(fields[9]);
    r.reg_success = fields[10] == "1";
    r.elapsed_s = std::stod(fields[11]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<PairResult> read_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_csv(in);
}

// ---- JSON report and config ---------------------------------------------------

namespace {

json params_to_json(const GrouperParams& p) {
  json j;
  j["t_ss_adaptive"] = p.t_ss_adaptive;
  if (std::isfinite(p.t_ss_fixed)) j["t_ss_fixed"] = p.t_ss_fixed;
  j["t_nnsr"] = p.t_nnsr;
  j["n_ransac"] = p.n_ransac;
  j["d_ransac_pr"] = p.d_ransac_pr;
  j["t_st"] = p.t_st;
  j["t_gc_pr"] = p.t_gc_pr;
  j["n_gtm"] = p.n_gtm;
  j["t_gtm_adaptive"] = p.t_gtm_adaptive;
  if (std::isfinite(p.t_gtm_fixed)) j["t_gtm_fixed"] = p.t_gtm_fixed;
  j["gtm_jitter_start"] = p.gtm_jitter_start;
  j["kappa"] = p.kappa;
  j["varsigma"] = p.varsigma;
  j["delta_pr"] = p.delta_pr;
  j["si_ratio_init"] = p.si_ratio_init;
  j["k_cv"] = p.k_cv;
  j["t_cv_adaptive"] = p.t_cv_adaptive;
  if (std::isfinite(p.t_cv_fixed)) j["t_cv_fixed"] = p.t_cv_fixed;
  j["delta_r_pr"] = p.delta_r_pr;
  j["delta_l_deg"] = p.delta_l_deg;
  j["hough_bin_pr"] = p.hough_bin_pr;
  j["hough_include_neighbors"] = p.hough_include_neighbors;
  j["rng_seed"] = p.rng_seed;
  return j;
}

void params_from_json(const json& j, GrouperParams& p) {
  p.t_ss_adaptive = j.value("t_ss_adaptive", p.t_ss_adaptive);
  p.t_ss_fixed = j.value("t_ss_fixed", p.t_ss_fixed);
  p.t_nnsr = j.value("t_nnsr", p.t_nnsr);
  p.n_ransac = j.value("n_ransac", p.n_ransac);
  p.d_ransac_pr = j.value("d_ransac_pr", p.d_ransac_pr);
  p.t_st = j.value("t_st", p.t_st);
  p.t_gc_pr = j.value("t_gc_pr", p.t_gc_pr);
  p.n_gtm = j.value("n_gtm", p.n_gtm);
  p.t_gtm_adaptive = j.value("t_gtm_adaptive", p.t_gtm_adaptive);
  p.t_gtm_fixed = j.value("t_gtm_fixed", p.t_gtm_fixed);
  p.gtm_jitter_start = j.value("gtm_jitter_start", p.gtm_jitter_start);
  p.kappa = j.value("kappa", p.kappa);
  p.varsigma = j.value("varsigma", p.varsigma);
  p.delta_pr = j.value("delta_pr", p.delta_pr);
  p.si_ratio_init = j.value("si_ratio_init", p.si_ratio_init);
  p.k_cv = j.value("k_cv", p.k_cv);
  p.t_cv_adaptive = j.value("t_cv_adaptive", p.t_cv_adaptive);
  p.t_cv_fixed = j.value("t_cv_fixed", p.t_cv_fixed);
  p.delta_r_pr = j.value("delta_r_pr", p.delta_r_pr);
  p.delta_l_deg = j.value("delta_l_deg", p.delta_l_deg);
  p.hough_bin_pr = j.value("hough_bin_pr", p.hough_bin_pr);
  p.hough_include_neighbors =
      j.value("hough_include_neighbors", p.hough_include_neighbors);
  p.rng_seed = j.value("rng_seed", p.rng_seed);
}

json generator_to_json(const BenchGenerator& g) {
  json j;
  j["type"] = g.type;
  j["n"] = g.n;
  j["inlier_ratio"] = g.inlier_ratio;
  j["pos_sigma_pr"] = g.pos_sigma_pr;
  j["extent"] = g.extent;
  j["lrf_jitter_deg"] = g.lrf_jitter_deg;
  j["scores"] = {{"sim_inlier_mean", g.scores.sim_inlier_mean},
                 {"sim_inlier_sd", g.scores.sim_inlier_sd},
                 {"sim_outlier_mean", g.scores.sim_outlier_mean},
                 {"sim_outlier_sd", g.scores.sim_outlier_sd},
                 {"ratio_inlier_mean", g.scores.ratio_inlier_mean},
                 {"ratio_inlier_sd", g.scores.ratio_inlier_sd},
                 {"ratio_outlier_mean", g.scores.ratio_outlier_mean},
                 {"ratio_outlier_sd", g.scores.ratio_outlier_sd}};
  j["cloud_points"] = g.cloud_points;
  j["nms_radius_pr"] = g.nms_radius_pr;
  j["detect_support_pr"] = g.detect_support_pr;
  j["support_radius_pr"] = g.support_radius_pr;
  j["descriptor"] = g.descriptor;
  j["corrupt_prob"] = g.corrupt_prob;
  j["oracle_noise"] = g.oracle_noise;
  j["oracle_dim"] = g.oracle_dim;
  if (!g.pairs.empty()) {
    json pairs = json::array();
    for (const auto& p : g.pairs)
      pairs.push_back({{"source", p.source}, {"target", p.target}, {"pose", p.pose}});
    j["pairs"] = pairs;
  }
  return j;
}

void generator_from_json(const json& j, BenchGenerator& g) {
  g.type = j.value("type", g.type);
  g.n = j.value("n", g.n);
  g.inlier_ratio = j.value("inlier_ratio", g.inlier_ratio);
  g.pos_sigma_pr = j.value("pos_sigma_pr", g.pos_sigma_pr);
  g.extent = j.value("extent", g.extent);
  g.lrf_jitter_deg = j.value("lrf_jitter_deg", g.lrf_jitter_deg);
  if (j.contains("scores")) {
    const auto& s = j["scores"];
    g.scores.sim_inlier_mean = s.value("sim_inlier_mean", g.scores.sim_inlier_mean);
    g.scores.sim_inlier_sd = s.value("sim_inlier_sd", g.scores.sim_inlier_sd);
    g.scores.sim_outlier_mean =
        s.value("sim_outlier_mean", g.scores.sim_outlier_mean);
    g.scores.sim_outlier_sd = s.value("sim_outlier_sd", g.scores.sim_outlier_sd);
    g.scores.ratio_inlier_mean =
        s.value("ratio_inlier_mean", g.scores.ratio_inlier_mean);
    g.scores.ratio_inlier_sd =
        s.value("ratio_inlier_sd", g.scores.ratio_inlier_sd);
    g.scores.ratio_outlier_mean =
        s.value("ratio_outlier_mean", g.scores.ratio_outlier_mean);
    g.scores.ratio_outlier_sd =
        s.value("ratio_outlier_sd", g.scores.ratio_outlier_sd);
  }
  g.cloud_points = j.value("cloud_points", g.cloud_points);
  g.nms_radius_pr = j.value("nms_radius_pr", g.nms_radius_pr);
  g.detect_support_pr = j.value("detect_support_pr", g.detect_support_pr);
  g.support_radius_pr = j.value("support_radius_pr", g.support_radius_pr);
  g.descriptor = j.value("descriptor", g.descriptor);
  g.corrupt_prob = j.value("corrupt_prob", g.corrupt_prob);
  g.oracle_noise = j.value("oracle_noise", g.oracle_noise);
  g.oracle_dim = j.value("oracle_dim", g.oracle_dim);
  if (j.contains("pairs")) {
    g.pairs.clear();
    for (const auto& p : j["pairs"])
      g.pairs.push_back({p.at("source").get<std::string>(),
                         p.at("target").get<std::string>(),
                         p.at("pose").get<std::string>()});
  }
}

json config_to_json_obj(const BenchConfig& cfg) {
  json j;
  j["methods"] = cfg.methods;
  j["nuisance"] = cfg.nuisance;
  j["levels"] = cfg.levels;
  j["epsilon_pr"] = cfg.epsilon_pr;
  j["tau_reg"] = cfg.tau_reg;
  j["repetitions"] = cfg.repetitions;
  j["rng_seed"] = cfg.rng_seed;
  j["jobs"] = cfg.jobs;
  j["params"] = params_to_json(cfg.params);
  j["generator"] = generator_to_json(cfg.generator);
  if (!cfg.out_prefix.empty()) j["out_prefix"] = cfg.out_prefix;
  return j;
}

}  // namespace

std::string bench_config_to_json(const BenchConfig& cfg) {
  return config_to_json_obj(cfg).dump(2);
}

BenchConfig load_bench_config(std::istream& in) {
  json j = json::parse(in);
  BenchConfig cfg;
  if (j.contains("methods"))
    cfg.methods = j["methods"].get<std::vector<std::string>>();
  cfg.nuisance = j.value("nuisance", cfg.nuisance);
  if (j.contains("levels")) cfg.levels = j["levels"].get<std::vector<double>>();
  cfg.epsilon_pr = j.value("epsilon_pr", cfg.epsilon_pr);
  cfg.tau_reg = j.value("tau_reg", cfg.tau_reg);
  cfg.repetitions = j.value("repetitions", cfg.repetitions);
  cfg.rng_seed = j.value("rng_seed", cfg.rng_seed);
  cfg.jobs = j.value("jobs", cfg.jobs);
  if (j.contains("params")) params_from_json(j["params"], cfg.params);
  if (j.contains("generator")) generator_from_json(j["generator"], cfg.generator);
  cfg.out_prefix = j.value("out_prefix", cfg.out_prefix);
  return cfg;
}

BenchConfig load_bench_config(const std::filesystem::path& path) {
  auto in = open_input(path);
  return load_bench_config(in);
}

void write_report_json(std::ostream& out, const Report& report) {
  json j;
  j["config"] = config_to_json_obj(report.config);
  json rows = json::array();
  for (const auto& r : report.rows) {
    json row;
    row["method"] = r.method;
    row["nuisance"] = r.nuisance;
    row["level"] = r.level;
    row["seed"] = r.seed;
    row["n_corr"] = r.n_corr;
    row["n_inliers"] = r.n_inliers;
    row["inlier_ratio"] = r.inlier_ratio;
    row["precision"] = r.precision;
    row["recall"] = r.recall;
    row["fscore"] = r.fscore;
    row["reg_success"] = r.reg_success;
    row["elapsed_s"] = r.elapsed_s;
    if (!r.note.empty()) row["note"] = r.note;
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  json aggs = json::array();
  for (const auto& a : report.aggregates) {
    aggs.push_back({{"method", a.method},
                    {"level", a.level},
                    {"n_pairs", a.n_pairs},
                    {"n_failures", a.n_failures},
                    {"mean_precision", a.mean_precision},
                    {"mean_recall", a.mean_recall},
                    {"mean_fscore", a.mean_fscore},
                    {"success_rate", a.success_rate},
                    {"median_elapsed_s", a.median_elapsed_s}});
  }
  j["aggregates"] = std::move(aggs);
  out << j.dump(2) << '\n';
}

void write_report_json(const std::filesystem::path& path, const Report& report) {
  auto out = open_output(path);
  write_report_json(out, report);
}

void write_markdown(std::ostream& out, const Report& report) {
  out << "# cgbench report\n\n";

  // One table per nuisance present in the rows (a single run has one).
  std::vector<std::string> nuisances;
  for (const auto& r : report.rows)
    if (std::find(nuisances.begin(), nuisances.end(), r.nuisance) ==
        nuisances.end())
      nuisances.push_back(r.nuisance);

  char buf[64];
  for (const auto& nuisance : nuisances) {
    std::vector<PairResult> rows;
    for (const auto& r : report.rows)
      if (r.nuisance == nuisance) rows.push_back(r);
    const auto aggs = aggregate(rows);

    out << "## " << nuisance << "\n\n";
    out << "| method | level | pairs | failures | precision | recall | "
           "f-score | success | median s |\n";
    out << "|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& a : aggs) {
      std::snprintf(buf, sizeof buf, "%.4g", a.level);
      out << "| " << a.method << " | " << buf << " | " << a.n_pairs << " | "
          << a.n_failures << " | ";
      std::snprintf(buf, sizeof buf, "%.4f", a.mean_precision);
      out << buf << " | ";
      std::snprintf(buf, sizeof buf, "%.4f", a.mean_recall);
      out << buf << " | ";
      std::snprintf(buf, sizeof buf, "%.4f", a.mean_fscore);
      out << buf << " | ";
      std::snprintf(buf, sizeof buf, "%.4f", a.success_rate);
      out << buf << " | ";
      std::snprintf(buf, sizeof buf, "%.6f", a.median_elapsed_s);
      out << buf << " |\n";
    }
    out << '\n';
  }
}

void write_markdown(const std::filesystem::path& path, const Report& report) {
  auto out = open_output(path);
  write_markdown(out, report);
}

}  // namespace cgbench
