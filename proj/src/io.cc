#include "fastmap/io.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <Eigen/Geometry>

#include "fastmap/error.h"

namespace fastmap {

namespace {

std::string Fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v + 0.0);  // no "-0"
  return buf;
}

// Next line that is neither blank nor a comment. Returns false at EOF.
bool NextLine(std::istream& in, std::string& line, int& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }
  return false;
}

[[noreturn]] void ParseError(int line_no, const std::string& what) {
  throw Error("matches: line " + std::to_string(line_no) + ": " + what);
}

std::string Rest(std::istringstream& ss) {
  std::string rest;
  std::getline(ss >> std::ws, rest);
  return rest;
}

}  // namespace

MatchSet ParseMatches(std::istream& in) {
  MatchSet ms;
  std::string line;
  int line_no = 0;
  if (!NextLine(in, line, line_no)) ParseError(line_no, "empty file");
  {
    std::istringstream ss(line);
    std::string magic;
    int version = 0;
    if (!(ss >> magic >> version) || magic != "FASTMAP_MATCHES") {
      ParseError(line_no, "missing FASTMAP_MATCHES header");
    }
    if (version != 1) ParseError(line_no, "unsupported version");
  }
  while (NextLine(in, line, line_no)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "IMAGE") {
      Image image;
      std::size_t num_kp = 0;
      if (!(ss >> image.id >> image.camera_id >> image.width >> image.height >>
            num_kp)) {
        ParseError(line_no, "bad IMAGE record");
      }
      image.name = Rest(ss);
      image.keypoints.resize(num_kp);
      for (auto& kp : image.keypoints) {
        if (!NextLine(in, line, line_no)) ParseError(line_no, "truncated keypoints");
        std::istringstream ks(line);
        if (!(ks >> kp.x() >> kp.y())) ParseError(line_no, "bad keypoint");
      }
      ms.images.push_back(std::move(image));
    } else if (tag == "PAIR") {
      ImagePairMatches pair;
      std::string geometry;
      std::size_t num = 0;
      if (!(ss >> pair.i >> pair.j >> geometry >> num)) {
        ParseError(line_no, "bad PAIR record");
      }
      if (geometry == "F") {
        pair.geometry = GeometryClass::kFundamental;
      } else if (geometry == "H") {
        pair.geometry = GeometryClass::kHomography;
      } else {
        ParseError(line_no, "geometry must be F or H");
      }
      pair.correspondences.resize(num);
      for (auto& c : pair.correspondences) {
        if (!NextLine(in, line, line_no)) {
          ParseError(line_no, "truncated correspondences");
        }
        std::istringstream cs(line);
        if (!(cs >> c.kp1 >> c.kp2)) ParseError(line_no, "bad correspondence");
      }
      pair.num_original = num;
      ms.pairs.push_back(std::move(pair));
    } else {
      ParseError(line_no, "unknown record '" + tag + "'");
    }
  }
  const auto diagnostics = Validate(ms);
  if (!diagnostics.empty()) {
    throw Error("matches: " + diagnostics.front().code + ": " +
                diagnostics.front().message);
  }
  return ms;
}

MatchSet ReadMatches(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("matches: cannot open " + path);
  return ParseMatches(in);
}

void WriteMatches(const MatchSet& ms, std::ostream& out) {
  out << "FASTMAP_MATCHES 1\n";
  for (const Image& image : ms.images) {
    out << "IMAGE " << image.id << ' ' << image.camera_id << ' ' << image.width
        << ' ' << image.height << ' ' << image.keypoints.size() << ' '
        << image.name << '\n';
    for (const auto& kp : image.keypoints) {
      out << Fmt(kp.x()) << ' ' << Fmt(kp.y()) << '\n';
    }
  }
  for (const auto& pair : ms.pairs) {
    out << "PAIR " << pair.i << ' ' << pair.j << ' '
        << (pair.geometry == GeometryClass::kFundamental ? 'F' : 'H') << ' '
        << pair.correspondences.size() << '\n';
    for (const auto& c : pair.correspondences) {
      out << c.kp1 << ' ' << c.kp2 << '\n';
    }
  }
}

void WriteMatches(const MatchSet& ms, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("matches: cannot write " + path);
  WriteMatches(ms, out);
  if (!out) throw Error("matches: write failed for " + path);
}

Eigen::Vector4d RotationToQuaternion(const Rotation3& rotation) {
  Eigen::Quaterniond q(rotation.matrix());
  q.normalize();
  Eigen::Vector4d v(q.w(), q.x(), q.y(), q.z());
  if (v(0) < 0.0) v = -v;
  return v;
}

Rotation3 QuaternionToRotation(const Eigen::Vector4d& q) {
  const Eigen::Quaterniond quat = Eigen::Quaterniond(q(0), q(1), q(2), q(3)).normalized();
  return Rotation3::Project(quat.toRotationMatrix());
}

void WriteModel(const SceneModel& scene, const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream out(std::filesystem::path(dir) / name);
    if (!out) throw Error("model: cannot write " + name);
    return out;
  };

  {
    auto out = open("cameras.txt");
    out << "# CAMERA_ID MODEL WIDTH HEIGHT f cx cy alpha\n";
    out << "# SIMPLE_DIVISION: x_u = x_d / (1 + alpha r_d^2), r_d in "
           "half-diagonal units\n";
    for (const auto& c : scene.cameras) {
      out << c.id + 1 << " SIMPLE_DIVISION " << c.width << ' ' << c.height
          << ' ' << Fmt(c.focal) << ' ' << Fmt(c.cx()) << ' ' << Fmt(c.cy())
          << ' ' << Fmt(c.alpha) << '\n';
    }
  }

  // point id per (image, keypoint), 1-based
  std::map<std::pair<int, int>, std::size_t> point_of;
  for (std::size_t p = 0; p < scene.points.size(); ++p) {
    const auto& pt = scene.points[p];
    for (std::size_t k = 0; k < pt.observations.size(); ++k) {
      if (pt.inlier.empty() || pt.inlier[k]) {
        point_of[{pt.observations[k].image, pt.observations[k].keypoint}] = p + 1;
      }
    }
  }

  {
    auto out = open("images.txt");
    out << "# IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME\n";
    out << "# POINTS2D[] as (X, Y, POINT3D_ID)\n";
    for (std::size_t k = 0; k < scene.poses.size(); ++k) {
      const ImagePose& pose = scene.poses[k];
      if (!pose.registered) continue;
      const Image& image = scene.images[k];
      const Eigen::Vector4d q = RotationToQuaternion(pose.rotation);
      const Eigen::Vector3d t = pose.Translation();
      out << k + 1 << ' ' << Fmt(q(0)) << ' ' << Fmt(q(1)) << ' ' << Fmt(q(2))
          << ' ' << Fmt(q(3)) << ' ' << Fmt(t(0)) << ' ' << Fmt(t(1)) << ' '
          << Fmt(t(2)) << ' ' << image.camera_id + 1 << ' ' << image.name
          << '\n';
      for (std::size_t p = 0; p < image.keypoints.size(); ++p) {
        const auto it = point_of.find({static_cast<int>(k), static_cast<int>(p)});
        const long id = it == point_of.end() ? -1 : static_cast<long>(it->second);
        if (p > 0) out << ' ';
        out << Fmt(image.keypoints[p].x()) << ' ' << Fmt(image.keypoints[p].y())
            << ' ' << id;
      }
      out << '\n';
    }
  }

  {
    auto out = open("points3D.txt");
    out << "# POINT3D_ID X Y Z R G B ERROR TRACK[] as (IMAGE_ID, POINT2D_IDX)\n";
    for (std::size_t p = 0; p < scene.points.size(); ++p) {
      const auto& pt = scene.points[p];
      out << p + 1 << ' ' << Fmt(pt.xyz.x()) << ' ' << Fmt(pt.xyz.y()) << ' '
          << Fmt(pt.xyz.z()) << ' ' << int(pt.rgb[0]) << ' ' << int(pt.rgb[1])
          << ' ' << int(pt.rgb[2]) << ' ' << Fmt(pt.error);
      for (std::size_t k = 0; k < pt.observations.size(); ++k) {
        if (!pt.inlier.empty() && !pt.inlier[k]) continue;
        out << ' ' << pt.observations[k].image + 1 << ' '
            << pt.observations[k].keypoint;
      }
      out << '\n';
    }
  }
}

namespace {

std::vector<std::string> DataLines(const std::filesystem::path& path,
                                   bool keep_blank) {
  std::ifstream in(path);
  if (!in) throw Error("model: cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line[0] == '#') continue;
    if (line.empty() && !keep_blank) continue;
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

SceneModel ReadModel(const std::string& dir) {
  const std::filesystem::path root(dir);
  if (!std::filesystem::is_directory(root)) {
    throw Error("model: not a directory: " + dir);
  }
  SceneModel scene;
  for (const auto& line : DataLines(root / "cameras.txt", false)) {
    std::istringstream ss(line);
    CameraModel c;
    std::string model;
    double cx = 0, cy = 0;
    if (!(ss >> c.id >> model >> c.width >> c.height >> c.focal >> cx >> cy >>
          c.alpha)) {
      throw Error("model: bad camera line: " + line);
    }
    if (model != "SIMPLE_DIVISION") throw Error("model: unknown camera " + model);
    --c.id;
    if (c.id < 0) throw Error("model: bad camera id");
    if (static_cast<int>(scene.cameras.size()) <= c.id) {
      scene.cameras.resize(c.id + 1);
    }
    scene.cameras[c.id] = c;
  }

  // images.txt alternates a pose line and a (possibly empty) points line.
  auto body = DataLines(root / "images.txt", true);
  // A trailing blank line that does not belong to a record.
  while (!body.empty() && body.back().empty() && body.size() % 2 == 1) {
    body.pop_back();
  }
  for (std::size_t k = 0; k + 1 <= body.size(); k += 2) {
    if (body[k].empty()) throw Error("model: empty image line");
    std::istringstream ss(body[k]);
    int id = 0, cam = 0;
    Eigen::Vector4d q;
    Eigen::Vector3d t;
    if (!(ss >> id >> q(0) >> q(1) >> q(2) >> q(3) >> t(0) >> t(1) >> t(2) >>
          cam)) {
      throw Error("model: bad image line: " + body[k]);
    }
    --id;
    --cam;
    if (id < 0 || cam < 0) throw Error("model: bad image id");
    if (static_cast<int>(scene.images.size()) <= id) {
      scene.images.resize(id + 1);
      scene.poses.resize(id + 1);
    }
    Image& image = scene.images[id];
    image.id = id;
    image.camera_id = cam;
    image.name = Rest(ss);
    if (cam < static_cast<int>(scene.cameras.size())) {
      image.width = scene.cameras[cam].width;
      image.height = scene.cameras[cam].height;
    }
    if (k + 1 < body.size()) {
      std::istringstream ps(body[k + 1]);
      double x, y;
      long pid;
      while (ps >> x >> y >> pid) image.keypoints.emplace_back(x, y);
    }
    ImagePose& pose = scene.poses[id];
    pose.rotation = QuaternionToRotation(q);
    pose.center = -(pose.rotation.matrix().transpose() * t);
    pose.registered = true;
  }
  for (std::size_t k = 0; k < scene.images.size(); ++k) {
    scene.images[k].id = static_cast<int>(k);
  }

  const auto points_path = root / "points3D.txt";
  if (std::filesystem::exists(points_path)) {
    for (const auto& line : DataLines(points_path, false)) {
      std::istringstream ss(line);
      long id;
      ScenePoint p;
      int r, g, b;
      if (!(ss >> id >> p.xyz.x() >> p.xyz.y() >> p.xyz.z() >> r >> g >> b >>
            p.error)) {
        throw Error("model: bad point line: " + line);
      }
      p.rgb = {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
               static_cast<std::uint8_t>(b)};
      Observation o;
      while (ss >> o.image >> o.keypoint) {
        --o.image;
        p.observations.push_back(o);
        p.inlier.push_back(true);
      }
      scene.points.push_back(std::move(p));
    }
  }
  return scene;
}

}  // namespace fastmap
