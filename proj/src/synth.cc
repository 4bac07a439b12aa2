#include "fastmap/synth.h"

#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>

#include "fastmap/error.h"
#include "fastmap/focal.h"
#include "fastmap/optim.h"
#include "fastmap/reconstruct.h"
#include "fastmap/union_find.h"

namespace fastmap {

Layout ParseLayout(const std::string& name) {
  if (name == "ring") return Layout::kRing;
  if (name == "grid") return Layout::kGrid;
  if (name == "random") return Layout::kRandom;
  throw Error("unknown layout '" + name + "'");
}

Rotation3 LookAt(const Eigen::Vector3d& center, const Eigen::Vector3d& target) {
  const Eigen::Vector3d z = (target - center).normalized();
  Eigen::Vector3d up = Eigen::Vector3d::UnitZ();
  if (std::abs(z.dot(up)) > 0.99) up = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d x = z.cross(up).normalized();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d r;
  r.row(0) = x;
  r.row(1) = y;
  r.row(2) = z;
  return Rotation3(r);
}

namespace {

std::vector<Eigen::Vector3d> CameraCenters(const SynthSpec& spec, Rng& rng) {
  const int n = spec.num_images;
  const double d = spec.camera_distance;
  std::vector<Eigen::Vector3d> out(n);
  switch (spec.layout) {
    case Layout::kRing:
      for (int k = 0; k < n; ++k) {
        const double a = 2.0 * M_PI * k / n + rng.Uniform(-0.05, 0.05);
        const double r = d * rng.Uniform(0.9, 1.1);
        out[k] = Eigen::Vector3d(r * std::cos(a), r * std::sin(a),
                                 rng.Uniform(-0.5, 0.5));
      }
      break;
    case Layout::kGrid: {
      const int cols = static_cast<int>(std::ceil(std::sqrt(n)));
      const double spacing = 0.6;
      for (int k = 0; k < n; ++k) {
        const double gx = (k % cols - 0.5 * (cols - 1)) * spacing;
        const double gy = (k / cols - 0.5 * (cols - 1)) * spacing;
        out[k] = Eigen::Vector3d(gx + rng.Uniform(-0.05, 0.05),
                                 gy + rng.Uniform(-0.05, 0.05),
                                 -d + rng.Uniform(-0.2, 0.2));
      }
      break;
    }
    case Layout::kRandom:
      for (int k = 0; k < n; ++k) {
        Eigen::Vector3d v(rng.Normal(), rng.Normal(), rng.Normal());
        out[k] = v.normalized() * d * rng.Uniform(0.9, 1.1);
      }
      break;
  }
  return out;
}

}  // namespace

SynthScene Generate(const SynthSpec& spec) {
  if (spec.num_images < 3 || spec.num_points < 50 || spec.num_cameras < 1 ||
      spec.width <= 0 || spec.height <= 0) {
    throw Error("synth: invalid spec");
  }
  Rng rng(spec.seed);
  SynthScene scene;

  std::vector<Eigen::Vector3d>& points = scene.points;
  points.resize(spec.num_points);
  for (auto& p : points) {
    p = Eigen::Vector3d(rng.Uniform(-1, 1), rng.Uniform(-1, 1),
                        spec.planar ? 0.0 : rng.Uniform(-1, 1));
  }

  for (int c = 0; c < spec.num_cameras; ++c) {
    CameraModel cam;
    cam.id = c;
    cam.width = spec.width;
    cam.height = spec.height;
    const double fov = c < static_cast<int>(spec.camera_fov_deg.size())
                           ? spec.camera_fov_deg[c]
                           : spec.fov_deg;
    cam.focal = FocalFromFov(fov, spec.width);
    cam.alpha = c < static_cast<int>(spec.camera_alpha.size())
                    ? spec.camera_alpha[c]
                    : spec.alpha;
    scene.gt.cameras.push_back(cam);
  }

  const auto centers = CameraCenters(spec, rng);
  const int n = spec.num_images;
  scene.gt.poses.resize(n);
  scene.matches.images.resize(n);
  // keypoint index of each point per image, -1 if not visible
  std::vector<std::vector<int>> kp_of(n, std::vector<int>(spec.num_points, -1));
  for (int k = 0; k < n; ++k) {
    const Eigen::Vector3d target(rng.Uniform(-0.2, 0.2), rng.Uniform(-0.2, 0.2),
                                 rng.Uniform(-0.2, 0.2));
    ImagePose& pose = scene.gt.poses[k];
    pose.center = centers[k];
    pose.rotation = LookAt(centers[k], target);
    pose.registered = true;

    Image& image = scene.matches.images[k];
    image.id = k;
    image.camera_id = k % spec.num_cameras;
    image.name = "img" + std::to_string(k) + ".png";
    image.width = spec.width;
    image.height = spec.height;
    const CameraModel& cam = scene.gt.cameras[image.camera_id];
    for (int p = 0; p < spec.num_points; ++p) {
      auto px = ProjectToPixel(cam, pose, points[p]);
      if (!px || px->x() < 0 || px->y() < 0 || px->x() > spec.width ||
          px->y() > spec.height) {
        continue;
      }
      if (spec.noise_px > 0.0) {
        *px += spec.noise_px * Eigen::Vector2d(rng.Normal(), rng.Normal());
        px->x() = std::clamp(px->x(), 0.0, double(spec.width));
        px->y() = std::clamp(px->y(), 0.0, double(spec.height));
      }
      kp_of[k][p] = static_cast<int>(image.keypoints.size());
      image.keypoints.push_back(*px);
    }
    if (image.keypoints.size() < 50) {
      throw Error("synth: image " + std::to_string(k) + " sees " +
                  std::to_string(image.keypoints.size()) + " points");
    }
  }

  UnionFind graph(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      ImagePairMatches pair;
      pair.i = i;
      pair.j = j;
      pair.geometry = spec.planar ? GeometryClass::kHomography
                                  : GeometryClass::kFundamental;
      for (int p = 0; p < spec.num_points; ++p) {
        if (kp_of[i][p] < 0 || kp_of[j][p] < 0) continue;
        if (spec.match_recall < 1.0 && rng.Uniform() >= spec.match_recall) {
          continue;
        }
        pair.correspondences.push_back({kp_of[i][p], kp_of[j][p]});
      }
      if (static_cast<int>(pair.correspondences.size()) < spec.min_pair_matches) {
        continue;
      }
      // Outliers: rotate the second keypoint among a random subset.
      const std::size_t m = pair.correspondences.size();
      const auto num_out =
          static_cast<std::size_t>(std::round(spec.outlier_frac * m));
      if (num_out >= 2) {
        std::vector<std::size_t> idx(m);
        for (std::size_t k = 0; k < m; ++k) idx[k] = k;
        for (std::size_t k = 0; k < num_out; ++k) {
          std::swap(idx[k], idx[k + rng.Index(m - k)]);
        }
        const int first = pair.correspondences[idx[0]].kp2;
        for (std::size_t k = 0; k + 1 < num_out; ++k) {
          pair.correspondences[idx[k]].kp2 = pair.correspondences[idx[k + 1]].kp2;
        }
        pair.correspondences[idx[num_out - 1]].kp2 = first;
      }
      pair.num_original = m;
      graph.Union(i, j);
      scene.matches.pairs.push_back(std::move(pair));
    }
  }
  for (int k = 1; k < n; ++k) {
    if (graph.Find(k) != graph.Find(0)) throw Error("synth: disconnected view graph");
  }

  scene.gt.images = scene.matches.images;
  scene.gt.tracks.keypoint_track.resize(n);
  for (int k = 0; k < n; ++k) {
    scene.gt.tracks.keypoint_track[k].assign(scene.matches.images[k].keypoints.size(), -1);
  }
  for (int p = 0; p < spec.num_points; ++p) {
    ScenePoint sp;
    sp.xyz = points[p];
    for (int k = 0; k < n; ++k) {
      if (kp_of[k][p] >= 0) sp.observations.push_back({k, kp_of[k][p]});
    }
    if (sp.observations.size() < 2) continue;
    const int t = static_cast<int>(scene.gt.tracks.tracks.size());
    sp.track = t;
    sp.inlier.assign(sp.observations.size(), true);
    for (const auto& o : sp.observations) {
      scene.gt.tracks.keypoint_track[o.image][o.keypoint] = t;
    }
    scene.gt.tracks.tracks.push_back(sp.observations);
    scene.gt.points.push_back(std::move(sp));
  }
  return scene;
}

}  // namespace fastmap
