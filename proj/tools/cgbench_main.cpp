// cgbench command-line interface: synthetic pair generation, cloud
// perturbation, feature matching, correspondence grouping, benchmark sweeps,
// and report rendering. Diagnostics go to stderr; stdout carries data only
// with `--out -`.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "cgbench/bench.hpp"
#include "cgbench/features.hpp"
#include "cgbench/geometry.hpp"
#include "cgbench/groupers.hpp"
#include "cgbench/io.hpp"
#include "cgbench/kdtree.hpp"
#include "cgbench/rng.hpp"
#include "cgbench/synthdata.hpp"
#include "cgbench/version.hpp"

namespace {

using namespace cgbench;

/// Writes `body(stream)` to the path, or to stdout for "-".
template <typename Fn>
void with_output(const std::string& out, Fn&& body) {
  if (out == "-") {
    body(std::cout);
    return;
  }
  std::ofstream file(out);
  if (!file) throw std::runtime_error("cannot write " + out);
  body(file);
}

struct GenArgs {
  int n = 5000;
  std::uint64_t seed = 0;
  std::string out;
  double overlap = -1.0;
  double sigma_pr = -1.0;
  double keep_ratio = -1.0;
  // correspondence mode
  int n_corr = -1;
  double inlier_ratio = 0.1;
  double pos_sigma_pr = 0.5;
  double extent = 1.0;
  double lrf_jitter = 0.0;
};

int run_gen(const GenArgs& a) {
  const bool corr_mode = a.n_corr >= 0;
  if (corr_mode && (a.overlap >= 0.0 || a.sigma_pr >= 0.0 || a.keep_ratio >= 0.0)) {
    std::cerr << "gen: --corr conflicts with --overlap/--sigma-pr/--keep-ratio"
              << std::endl;
    return 1;
  }

  Rng rng(mix64(a.seed, 0x67656eull));
  if (corr_mode) {
    const RigidTransform gt = random_rigid_transform(rng, a.extent);
    auto data = synth_correspondences(a.n_corr, a.inlier_ratio, gt,
                                      a.pos_sigma_pr, a.extent, a.seed, {},
                                      a.lrf_jitter);
    with_output(a.out + ".corr.json",
                [&](std::ostream& os) { save_correspondences(os, data.set); });
    std::ofstream labels(a.out + ".labels.txt");
    for (bool l : data.labels) labels << (l ? 1 : 0) << '\n';
    save_poses(std::filesystem::path(a.out + "_pose.txt"), {gt});
    std::cerr << "gen: wrote " << a.out << ".corr.json (" << data.set.size()
              << " correspondences)" << std::endl;
    return 0;
  }

  PointCloud source = make_shape_cloud(a.n, mix64(a.seed, 0x736863ull));
  const RigidTransform gt = random_rigid_transform(rng, 2.0);
  SyntheticPair pair;
  if (a.overlap >= 0.0) {
    pair = make_partial_pair(source, a.overlap, gt, mix64(a.seed, 0x6f76ull));
  } else {
    pair.source = std::move(source);
    pair.target = apply_transform(pair.source, gt);
    pair.gt = gt;
    pair.meta = PairMeta{"none", 0.0, a.seed};
  }
  if (a.sigma_pr >= 0.0) {
    pair.target = add_gaussian_noise(pair.target, a.sigma_pr, mix64(a.seed, 0x6e6full));
    pair.meta = PairMeta{"noise", a.sigma_pr, a.seed};
  }
  if (a.keep_ratio >= 0.0) {
    pair.target = downsample_random(pair.target, a.keep_ratio, mix64(a.seed, 0x646eull));
    pair.meta = PairMeta{"density", a.keep_ratio, a.seed};
  }
  save_pair(a.out, pair);
  std::cerr << "gen: wrote " << a.out << "_{source,target}.ply, _pose.txt, _meta.json"
            << std::endl;
  return 0;
}

struct PerturbArgs {
  std::string in, out;
  double sigma_pr = -1.0;
  double keep_ratio = -1.0;
  std::uint64_t seed = 0;
};

int run_perturb(const PerturbArgs& a) {
  if (a.sigma_pr < 0.0 && a.keep_ratio < 0.0) {
    std::cerr << "perturb: need --sigma-pr or --keep-ratio" << std::endl;
    return 1;
  }
  PointCloud cloud = load_ply(std::filesystem::path(a.in));
  if (a.sigma_pr >= 0.0)
    cloud = add_gaussian_noise(cloud, a.sigma_pr, mix64(a.seed, 0x6e6full));
  if (a.keep_ratio >= 0.0)
    cloud = downsample_random(cloud, a.keep_ratio, mix64(a.seed, 0x646eull));
  with_output(a.out, [&](std::ostream& os) { save_ply(os, cloud); });
  return 0;
}

struct MatchArgs {
  std::string in, in2, out;
  double nms_radius_pr = 6.0;
  double detect_support_pr = 5.0;
  double support_radius_pr = 15.0;
  std::string descriptor = "ref";
  std::string gt_path;
  double corrupt_prob = 0.0;
  double noise_sigma = 0.0;
  int dim = 16;
  std::uint64_t seed = 0;
  bool mutual = false;
};

int run_match(const MatchArgs& a) {
  if (a.descriptor == "oracle" && a.gt_path.empty()) {
    std::cerr << "match: --descriptor oracle requires --gt" << std::endl;
    return 1;
  }
  const PointCloud source = load_ply(std::filesystem::path(a.in));
  const PointCloud target = load_ply(std::filesystem::path(a.in2));
  RigidTransform gt;
  if (!a.gt_path.empty()) {
    const auto poses = load_poses(std::filesystem::path(a.gt_path));
    if (poses.empty()) throw std::runtime_error(a.gt_path + ": no pose");
    gt = poses.front();
  }

  const double pr = source.resolution();
  NeighborIndex source_index(source);
  NeighborIndex target_index(target);

  auto prepare = [&](const PointCloud& cloud, const NeighborIndex& index,
                     const RigidTransform& oracle_gt,
                     std::vector<Keypoint>& kps, std::vector<Feature>& feats) {
    auto detected = detect_keypoints(cloud, index, a.nms_radius_pr * pr,
                                     a.detect_support_pr * pr);
    for (auto& kp : detected) {
      LRF lrf;
      try {
        lrf = compute_lrf(cloud, index, kp.position, a.support_radius_pr * pr);
      } catch (const std::runtime_error&) {
        continue;
      }
      kp.lrf = lrf;
      Feature f;
      if (a.descriptor == "oracle") {
        f = oracle_describe(kp, oracle_gt, a.corrupt_prob, a.noise_sigma,
                            a.dim, a.seed);
      } else {
        try {
          f = describe(cloud, index, kp, a.support_radius_pr * pr);
        } catch (const std::runtime_error&) {
          continue;
        }
      }
      kps.push_back(kp);
      feats.push_back(std::move(f));
    }
  };

  std::vector<Keypoint> src_kps, tgt_kps;
  std::vector<Feature> src_feats, tgt_feats;
  prepare(source, source_index, gt, src_kps, src_feats);
  prepare(target, target_index, RigidTransform{}, tgt_kps, tgt_feats);

  MatchOptions opts;
  opts.mutual = a.mutual;
  const auto set = match_features(src_feats, tgt_feats, src_kps, tgt_kps, opts);
  with_output(a.out, [&](std::ostream& os) { save_correspondences(os, set); });
  std::cerr << "match: " << set.size() << " correspondences ("
            << src_kps.size() << " source / " << tgt_kps.size()
            << " target keypoints)" << std::endl;
  return 0;
}

struct GroupArgs {
  std::string method, in, out;
  std::string src_cloud, dst_cloud;
  std::string config;
  double pr_override = -1.0;
  double support_radius_pr = 15.0;
  std::uint64_t seed = 0;
};

int run_group(const GroupArgs& a) {
  const bool needs_lrfs =
      a.method == "si" || a.method == "cv" || a.method == "3dhv";
  if (needs_lrfs && (a.src_cloud.empty() || a.dst_cloud.empty())) {
    std::cerr << "group: method '" << a.method
              << "' needs --src and --dst clouds to build LRFs" << std::endl;
    return 1;
  }

  CorrespondenceSet set = load_correspondences(std::filesystem::path(a.in));

  GrouperParams params;
  if (!a.config.empty()) {
    // Grouper overrides ride in the "params" object of a bench config file
    // (or a bare params object).
    std::ifstream in(a.config);
    if (!in) throw std::runtime_error("cannot open " + a.config);
    std::stringstream buffer;
    buffer << in.rdbuf();
    BenchConfig cfg;
    std::istringstream stream1(buffer.str());
    cfg = load_bench_config(stream1);
    params = cfg.params;
  }
  params.rng_seed = a.seed;

  GroupingContext ctx;
  PointCloud source, target;
  if (!a.src_cloud.empty()) {
    source = load_ply(std::filesystem::path(a.src_cloud));
    ctx.source_cloud = &source;
  }
  if (!a.dst_cloud.empty()) {
    target = load_ply(std::filesystem::path(a.dst_cloud));
    ctx.target_cloud = &target;
  }

  if (a.pr_override > 0.0) {
    ctx.pr = a.pr_override;
  } else if (ctx.source_cloud != nullptr) {
    ctx.pr = ctx.source_cloud->resolution();
  } else {
    // No cloud given: treat the correspondence source keypoints as a cloud.
    PointCloud kp_cloud;
    for (const auto& c : set.items) kp_cloud.points.push_back(c.source.position);
    if (kp_cloud.size() >= 2) ctx.pr = kp_cloud.resolution();
  }

  if (needs_lrfs) {
    NeighborIndex source_index(*ctx.source_cloud);
    NeighborIndex target_index(*ctx.target_cloud);
    const double radius = a.support_radius_pr * ctx.pr;
    for (const auto& c : set.items) {
      if (!ctx.source_lrfs.contains(c.source.cloud_index))
        ctx.source_lrfs.emplace(
            c.source.cloud_index,
            compute_lrf(*ctx.source_cloud, source_index, c.source.position, radius));
      if (!ctx.target_lrfs.contains(c.target.cloud_index))
        ctx.target_lrfs.emplace(
            c.target.cloud_index,
            compute_lrf(*ctx.target_cloud, target_index, c.target.position, radius));
    }
  }

  const GroupingResult result = run_grouper(a.method, set, params, ctx);
  with_output(a.out, [&](std::ostream& os) { save_grouping_result(os, result); });
  std::cerr << "group: " << a.method << " selected " << result.selected.size()
            << "/" << set.size() << " in " << result.elapsed_s << " s"
            << std::endl;
  return 0;
}

struct BenchArgs {
  std::string config;
  std::string out_prefix;
  std::int64_t seed = -1;
  int jobs = 0;
  double eps_pr = -1.0;
  double tau_reg = -1.0;
};

int run_bench(const BenchArgs& a) {
  BenchConfig cfg = load_bench_config(std::filesystem::path(a.config));
  if (a.seed >= 0) cfg.rng_seed = static_cast<std::uint64_t>(a.seed);
  if (a.jobs > 0) cfg.jobs = a.jobs;
  if (a.eps_pr > 0.0) cfg.epsilon_pr = a.eps_pr;
  if (a.tau_reg > 0.0) cfg.tau_reg = a.tau_reg;
  if (!a.out_prefix.empty()) cfg.out_prefix = a.out_prefix;
  if (cfg.out_prefix.empty()) {
    std::cerr << "bench: no output prefix (config out_prefix or --out)"
              << std::endl;
    return 1;
  }
  const Report report = run_benchmark(cfg);
  std::cerr << "bench: " << report.rows.size() << " rows -> "
            << cfg.out_prefix << ".{csv,json,md}" << std::endl;
  return 0;
}

struct ReportArgs {
  std::string in, out;
};

int run_report(const ReportArgs& a) {
  Report report;
  report.rows = read_csv(std::filesystem::path(a.in));
  report.aggregates = aggregate(report.rows);
  with_output(a.out, [&](std::ostream& os) { write_markdown(os, report); });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cgbench: correspondence grouping benchmark for 3D rigid matching"};
  app.set_version_flag("--version", cgbench::kVersion);
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand(
      "gen", "Generate a synthetic pair (PLY+pose+meta) or correspondence set");
  gen_cmd->add_option("--n", gen.n, "Shape cloud point count");
  gen_cmd->add_option("--seed", gen.seed, "RNG seed");
  gen_cmd->add_option("--out", gen.out, "Output prefix")->required();
  gen_cmd->add_option("--overlap", gen.overlap, "Target overlap in (0,1]");
  gen_cmd->add_option("--sigma-pr", gen.sigma_pr, "Gaussian noise sigma in pr");
  gen_cmd->add_option("--keep-ratio", gen.keep_ratio, "Decimation keep ratio");
  gen_cmd->add_option("--corr", gen.n_corr,
                      "Emit a synthetic correspondence set of this size instead");
  gen_cmd->add_option("--inlier-ratio", gen.inlier_ratio,
                      "Inlier ratio for --corr");
  gen_cmd->add_option("--pos-sigma-pr", gen.pos_sigma_pr,
                      "Inlier positional noise in pr for --corr");
  gen_cmd->add_option("--extent", gen.extent, "Scene extent for --corr");
  gen_cmd->add_option("--lrf-jitter-deg", gen.lrf_jitter,
                      "Inlier LRF jitter in degrees for --corr");

  PerturbArgs perturb;
  auto* perturb_cmd =
      app.add_subcommand("perturb", "Noise or downsample a PLY cloud");
  perturb_cmd->add_option("--in", perturb.in, "Input PLY")->required();
  perturb_cmd->add_option("--out", perturb.out, "Output PLY ('-' for stdout)")
      ->required();
  perturb_cmd->add_option("--sigma-pr", perturb.sigma_pr, "Noise sigma in pr");
  perturb_cmd->add_option("--keep-ratio", perturb.keep_ratio, "Keep ratio");
  perturb_cmd->add_option("--seed", perturb.seed, "RNG seed");

  MatchArgs match;
  auto* match_cmd = app.add_subcommand(
      "match", "Detect, describe and match a PLY pair into correspondence JSON");
  match_cmd->add_option("--in", match.in, "Source PLY")->required();
  match_cmd->add_option("--in2", match.in2, "Target PLY")->required();
  match_cmd->add_option("--out", match.out, "Correspondence JSON ('-' for stdout)")
      ->required();
  match_cmd->add_option("--nms-radius-pr", match.nms_radius_pr,
                        "Detector NMS radius in pr");
  match_cmd->add_option("--detect-support-pr", match.detect_support_pr,
                        "Detector saliency support radius in pr");
  match_cmd->add_option("--support-radius-pr", match.support_radius_pr,
                        "Descriptor/LRF support radius in pr");
  match_cmd->add_option("--descriptor", match.descriptor, "Descriptor")
      ->check(CLI::IsMember({"ref", "oracle"}));
  match_cmd->add_option("--gt", match.gt_path, "Pose file (oracle descriptor)");
  match_cmd->add_option("--corrupt-prob", match.corrupt_prob,
                        "Oracle corruption probability");
  match_cmd->add_option("--noise-sigma", match.noise_sigma,
                        "Oracle feature noise");
  match_cmd->add_option("--dim", match.dim, "Oracle feature dimension");
  match_cmd->add_option("--seed", match.seed, "RNG seed");
  match_cmd->add_flag("--mutual", match.mutual, "Keep mutual nearest neighbors only");

  GroupArgs group;
  auto* group_cmd = app.add_subcommand(
      "group", "Run one grouping method on a correspondence JSON");
  group_cmd->add_option("--method", group.method, "Grouping method")
      ->required()
      ->check(CLI::IsMember(std::vector<std::string>(
          cgbench::kMethodNames.begin(), cgbench::kMethodNames.end())));
  group_cmd->add_option("--in", group.in, "Correspondence JSON")->required();
  group_cmd->add_option("--out", group.out, "Result JSON ('-' for stdout)")
      ->required();
  group_cmd->add_option("--src", group.src_cloud, "Source PLY (pr + LRFs)");
  group_cmd->add_option("--dst", group.dst_cloud, "Target PLY (LRFs)");
  group_cmd->add_option("--config", group.config,
                        "JSON config with grouper parameter overrides");
  group_cmd->add_option("--pr", group.pr_override, "Resolution override");
  group_cmd->add_option("--support-radius-pr", group.support_radius_pr,
                        "LRF support radius in pr");
  group_cmd->add_option("--seed", group.seed, "RNG seed");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark sweep");
  bench_cmd->add_option("--config", bench.config, "BenchConfig JSON")->required();
  bench_cmd->add_option("--out", bench.out_prefix, "Output prefix override");
  bench_cmd->add_option("--seed", bench.seed, "RNG seed override");
  bench_cmd->add_option("--jobs", bench.jobs, "Parallel pair evaluation");
  bench_cmd->add_option("--eps-pr", bench.eps_pr, "Inlier tolerance in pr");
  bench_cmd->add_option("--tau-reg", bench.tau_reg,
                        "Registration success threshold");

  ReportArgs report;
  auto* report_cmd =
      app.add_subcommand("report", "Render a raw CSV into a markdown summary");
  report_cmd->add_option("--in", report.in, "Raw CSV")->required();
  report_cmd->add_option("--out", report.out, "Markdown output ('-' for stdout)")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen_cmd->parsed()) return run_gen(gen);
    if (perturb_cmd->parsed()) return run_perturb(perturb);
    if (match_cmd->parsed()) return run_match(match);
    if (group_cmd->parsed()) return run_group(group);
    if (bench_cmd->parsed()) return run_bench(bench);
    if (report_cmd->parsed()) return run_report(report);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
  return 0;
}
