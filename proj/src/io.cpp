#include "cgbench/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

namespace cgbench {

namespace {

using nlohmann::json;

[[noreturn]] void parse_fail(const std::string& origin, std::size_t line,
                             const std::string& what) {
  throw std::runtime_error(origin + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

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

double parse_finite(const std::string& tok, const std::string& origin,
                    std::size_t line) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    parse_fail(origin, line, "not a number: '" + tok + "'");
  }
  if (pos != tok.size()) parse_fail(origin, line, "trailing junk in '" + tok + "'");
  if (!std::isfinite(v)) parse_fail(origin, line, "non-finite value");
  return v;
}

}  // namespace

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- PLY --------------------------------------------------------------------

PointCloud load_ply(std::istream& in, const std::string& origin) {
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      return true;
    }
    return false;
  };

  if (!next_line() || split_ws(line) != std::vector<std::string>{"ply"})
    parse_fail(origin, lineno, "missing 'ply' magic");

  struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<std::string> properties;
  };
  std::vector<Element> elements;
  bool format_seen = false;
  bool header_done = false;

  while (next_line()) {
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks[0] == "comment") continue;
    if (toks[0] == "format") {
      if (toks.size() < 3 || toks[1] != "ascii" || toks[2] != "1.0")
        parse_fail(origin, lineno, "only 'format ascii 1.0' is supported");
      format_seen = true;
    } else if (toks[0] == "element") {
      if (toks.size() != 3) parse_fail(origin, lineno, "bad element line");
      Element e;
      e.name = toks[1];
      e.count = static_cast<std::size_t>(std::stoull(toks[2]));
      elements.push_back(std::move(e));
    } else if (toks[0] == "property") {
      if (elements.empty()) parse_fail(origin, lineno, "property before element");
      if (toks.size() < 3) parse_fail(origin, lineno, "bad property line");
      // Name is the last token; list properties are only tolerated on
      // elements we skip.
      elements.back().properties.push_back(toks.back());
    } else if (toks[0] == "end_header") {
      header_done = true;
      break;
    } else {
      parse_fail(origin, lineno, "unknown header line '" + toks[0] + "'");
    }
  }
  if (!header_done) parse_fail(origin, lineno, "missing end_header");
  if (!format_seen) parse_fail(origin, lineno, "missing format line");

  PointCloud cloud;
  for (const auto& elem : elements) {
    if (elem.name != "vertex") {
      for (std::size_t i = 0; i < elem.count; ++i)
        if (!next_line()) parse_fail(origin, lineno, "unexpected end of file");
      continue;
    }

    auto find_prop = [&](const std::string& name) -> int {
      for (std::size_t i = 0; i < elem.properties.size(); ++i)
        if (elem.properties[i] == name) return static_cast<int>(i);
      return -1;
    };
    const int ix = find_prop("x"), iy = find_prop("y"), iz = find_prop("z");
    if (ix < 0 || iy < 0 || iz < 0)
      parse_fail(origin, lineno, "vertex element lacks x/y/z");
    const int inx = find_prop("nx"), iny = find_prop("ny"), inz = find_prop("nz");
    const bool with_normals = inx >= 0 && iny >= 0 && inz >= 0;

    cloud.points.reserve(elem.count);
    if (with_normals) cloud.normals.reserve(elem.count);
    for (std::size_t i = 0; i < elem.count; ++i) {
      if (!next_line()) parse_fail(origin, lineno, "unexpected end of file");
      const auto toks = split_ws(line);
      if (toks.size() != elem.properties.size())
        parse_fail(origin, lineno, "vertex row has wrong field count");
      cloud.points.emplace_back(parse_finite(toks[ix], origin, lineno),
                                parse_finite(toks[iy], origin, lineno),
                                parse_finite(toks[iz], origin, lineno));
      if (with_normals)
        cloud.normals.emplace_back(parse_finite(toks[inx], origin, lineno),
                                   parse_finite(toks[iny], origin, lineno),
                                   parse_finite(toks[inz], origin, lineno));
    }
  }
  return cloud;
}

PointCloud load_ply(const std::filesystem::path& path) {
  auto in = open_input(path);
  return load_ply(in, path.string());
}

void save_ply(std::ostream& out, const PointCloud& cloud) {
  const bool with_normals = cloud.has_normals();
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << cloud.size() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  if (with_normals)
    out << "property double nx\nproperty double ny\nproperty double nz\n";
  out << "end_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    out << format_real(p.x()) << ' ' << format_real(p.y()) << ' '
        << format_real(p.z());
    if (with_normals) {
      const auto& n = cloud.normals[i];
      out << ' ' << format_real(n.x()) << ' ' << format_real(n.y()) << ' '
          << format_real(n.z());
    }
    out << '\n';
  }
}

void save_ply(const std::filesystem::path& path, const PointCloud& cloud) {
  auto out = open_output(path);
  save_ply(out, cloud);
}

// ---- Pose files -------------------------------------------------------------

std::vector<RigidTransform> load_poses(std::istream& in, const std::string& origin) {
  std::vector<RigidTransform> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks.size() != 12)
      parse_fail(origin, lineno, "expected 12 reals per pose line");
    double v[12];
    for (int i = 0; i < 12; ++i) v[i] = parse_finite(toks[i], origin, lineno);

    RigidTransform t;
    t.rotation << v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8];
    t.translation << v[9], v[10], v[11];

    const Eigen::Matrix3d gram = t.rotation.transpose() * t.rotation;
    if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
        std::abs(t.rotation.determinant() - 1.0) > 1e-6)
      parse_fail(origin, lineno, "rotation is not orthonormal with det +1");

    // Project onto SO(3) so downstream invariants hold exactly.
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(
        t.rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Vector3d d(1.0, 1.0,
                      (svd.matrixU() * svd.matrixV().transpose()).determinant());
    t.rotation = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
    out.push_back(t);
  }
  return out;
}

std::vector<RigidTransform> load_poses(const std::filesystem::path& path) {
  auto in = open_input(path);
  return load_poses(in, path.string());
}

void save_poses(std::ostream& out, const std::vector<RigidTransform>& poses) {
  for (const auto& t : poses) {
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out << format_real(t.rotation(r, c)) << ' ';
    out << format_real(t.translation.x()) << ' '
        << format_real(t.translation.y()) << ' '
        << format_real(t.translation.z()) << '\n';
  }
}

void save_poses(const std::filesystem::path& path,
                const std::vector<RigidTransform>& poses) {
  auto out = open_output(path);
  save_poses(out, poses);
}

// ---- Correspondence JSON ----------------------------------------------------

void save_correspondences(std::ostream& out, const CorrespondenceSet& set) {
  out << "[\n";
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& c = set.items[i];
    out << "  {\"src\": [" << format_real(c.source.position.x()) << ", "
        << format_real(c.source.position.y()) << ", "
        << format_real(c.source.position.z()) << "], \"dst\": ["
        << format_real(c.target.position.x()) << ", "
        << format_real(c.target.position.y()) << ", "
        << format_real(c.target.position.z()) << "], \"sim\": "
        << format_real(c.similarity) << ", \"ratio\": "
        << format_real(c.ratio_score) << ", \"src_idx\": " << c.source.cloud_index
        << ", \"dst_idx\": " << c.target.cloud_index << "}"
        << (i + 1 < set.size() ? ",\n" : "\n");
  }
  out << "]\n";
}

void save_correspondences(const std::filesystem::path& path,
                          const CorrespondenceSet& set) {
  auto out = open_output(path);
  save_correspondences(out, set);
}

CorrespondenceSet load_correspondences(std::istream& in) {
  json doc = json::parse(in);
  if (!doc.is_array())
    throw std::runtime_error("correspondence JSON: expected a top-level array");
  CorrespondenceSet set;
  set.items.reserve(doc.size());
  for (const auto& item : doc) {
    Correspondence c;
    const auto& src = item.at("src");
    const auto& dst = item.at("dst");
    if (src.size() != 3 || dst.size() != 3)
      throw std::runtime_error("correspondence JSON: src/dst must have 3 coords");
    c.source.position =
        Point3(src[0].get<double>(), src[1].get<double>(), src[2].get<double>());
    c.target.position =
        Point3(dst[0].get<double>(), dst[1].get<double>(), dst[2].get<double>());
    c.similarity = item.at("sim").get<double>();
    c.ratio_score = item.at("ratio").get<double>();
    c.source.cloud_index = item.at("src_idx").get<int>();
    c.target.cloud_index = item.at("dst_idx").get<int>();
    if (!c.source.position.allFinite() || !c.target.position.allFinite() ||
        !std::isfinite(c.similarity) || !std::isfinite(c.ratio_score))
      throw std::runtime_error("correspondence JSON: non-finite value");
    set.items.push_back(std::move(c));
  }
  return set;
}

CorrespondenceSet load_correspondences(const std::filesystem::path& path) {
  auto in = open_input(path);
  return load_correspondences(in);
}

// ---- GroupingResult JSON ----------------------------------------------------

void save_grouping_result(std::ostream& out, const GroupingResult& result) {
  out << "{\n  \"method\": \"" << result.method << "\",\n  \"selected\": [";
  for (std::size_t i = 0; i < result.selected.size(); ++i)
    out << (i ? ", " : "") << result.selected[i];
  out << "],\n  \"scores\": [";
  for (std::size_t i = 0; i < result.scores.size(); ++i)
    out << (i ? ", " : "") << format_real(result.scores[i]);
  out << "],\n  \"elapsed_s\": " << format_real(result.elapsed_s) << "\n}\n";
}

void save_grouping_result(const std::filesystem::path& path,
                          const GroupingResult& result) {
  auto out = open_output(path);
  save_grouping_result(out, result);
}

GroupingResult load_grouping_result(std::istream& in) {
  json doc = json::parse(in);
  GroupingResult r;
  r.method = doc.at("method").get<std::string>();
  for (const auto& v : doc.at("selected"))
    r.selected.push_back(v.get<std::size_t>());
  for (const auto& v : doc.at("scores")) r.scores.push_back(v.get<double>());
  r.elapsed_s = doc.at("elapsed_s").get<double>();
  return r;
}

GroupingResult load_grouping_result(const std::filesystem::path& path) {
  auto in = open_input(path);
  return load_grouping_result(in);
}

// ---- SyntheticPair bundle ---------------------------------------------------

void save_pair(const std::filesystem::path& prefix, const SyntheticPair& pair) {
  const std::string base = prefix.string();
  save_ply(std::filesystem::path(base + "_source.ply"), pair.source);
  save_ply(std::filesystem::path(base + "_target.ply"), pair.target);
  save_poses(std::filesystem::path(base + "_pose.txt"), {pair.gt});
  json meta;
  meta["nuisance"] = pair.meta.nuisance;
  meta["level"] = pair.meta.level;
  meta["seed"] = pair.meta.seed;
  auto out = open_output(std::filesystem::path(base + "_meta.json"));
  out << meta.dump(2) << '\n';
}

SyntheticPair load_pair(const std::filesystem::path& prefix) {
  const std::string base = prefix.string();
  SyntheticPair pair;
  pair.source = load_ply(std::filesystem::path(base + "_source.ply"));
  pair.target = load_ply(std::filesystem::path(base + "_target.ply"));
  const auto poses = load_poses(std::filesystem::path(base + "_pose.txt"));
  if (poses.empty()) throw std::runtime_error(base + "_pose.txt: no pose");
  pair.gt = poses.front();
  auto in = open_input(std::filesystem::path(base + "_meta.json"));
  json meta = json::parse(in);
  pair.meta.nuisance = meta.value("nuisance", std::string("none"));
  pair.meta.level = meta.value("level", 0.0);
  pair.meta.seed = meta.value("seed", std::uint64_t{0});
  return pair;
}

}  // namespace cgbench
