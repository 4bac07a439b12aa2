#include "fastmap/reconstruct.h"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "fastmap/distortion.h"
#include "fastmap/error.h"
#include "fastmap/focal.h"
#include "fastmap/geometry.h"
#include "fastmap/optim.h"
#include "fastmap/parallel.h"

namespace fastmap {

TriangulatedPoint TriangulatePair(const ImagePose& pose_i,
                                  const ImagePose& pose_j,
                                  const Eigen::Vector3d& x_i,
                                  const Eigen::Vector3d& x_j) {
  const Eigen::Vector3d ray_i = pose_i.rotation.matrix().transpose() * x_i;
  const Eigen::Vector3d ray_j = pose_j.rotation.matrix().transpose() * x_j;
  if ((pose_i.center - pose_j.center).norm() <= 1e-12) {
    throw Error("triangulation: coincident camera centers");
  }
  if (AngleBetween(ray_i, ray_j) <= 1e-9) {
    throw Error("triangulation: parallel rays");
  }
  Eigen::Matrix<double, 3, 4> p_i, p_j;
  p_i << pose_i.rotation.matrix(), pose_i.Translation();
  p_j << pose_j.rotation.matrix(), pose_j.Translation();
  Eigen::Matrix4d a;
  a.row(0) = x_i(0) * p_i.row(2) - x_i(2) * p_i.row(0);
  a.row(1) = x_i(1) * p_i.row(2) - x_i(2) * p_i.row(1);
  a.row(2) = x_j(0) * p_j.row(2) - x_j(2) * p_j.row(0);
  a.row(3) = x_j(1) * p_j.row(2) - x_j(2) * p_j.row(1);
  const Eigen::JacobiSVD<Eigen::Matrix4d> svd(a, Eigen::ComputeFullV);
  const Eigen::Vector4d h = svd.matrixV().col(3);
  if (std::abs(h(3)) <= 1e-300) throw Error("triangulation: point at infinity");
  TriangulatedPoint out;
  out.xyz = h.head<3>() / h(3);
  const double zi = (pose_i.rotation * (out.xyz - pose_i.center))(2);
  const double zj = (pose_j.rotation * (out.xyz - pose_j.center))(2);
  out.positive_depth = zi > 0.0 && zj > 0.0;
  return out;
}

std::optional<Eigen::Vector2d> ProjectToPixel(const CameraModel& camera,
                                              const ImagePose& pose,
                                              const Eigen::Vector3d& xyz) {
  const Eigen::Vector3d c = pose.rotation * (xyz - pose.center);
  if (c(2) <= 0.0) return std::nullopt;
  const Eigen::Vector2d undistorted =
      c.head<2>() / c(2) * (camera.focal / camera.HalfDiagonal());
  const auto distorted = Distort(undistorted, camera.alpha);
  if (!distorted) return std::nullopt;
  return CenteredToPixel(camera, *distorted);
}

namespace {

// Average of pairwise triangulations over the given observation indices.
std::optional<Eigen::Vector3d> AveragePairs(
    const std::vector<int>& members,
    const std::vector<Eigen::Vector3d>& rays, const std::vector<Observation>& obs,
    const PoseState& poses, int max_pairs, Rng& rng) {
  std::vector<std::pair<int, int>> pairs;
  const int m = static_cast<int>(members.size());
  if (m * (m - 1) / 2 <= max_pairs) {
    for (int a = 0; a < m; ++a) {
      for (int b = a + 1; b < m; ++b) pairs.emplace_back(members[a], members[b]);
    }
  } else {
    while (static_cast<int>(pairs.size()) < max_pairs) {
      const int a = static_cast<int>(rng.Index(m));
      const int b = static_cast<int>(rng.Index(m));
      if (a != b) pairs.emplace_back(members[a], members[b]);
    }
  }
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  int count = 0;
  for (const auto& [a, b] : pairs) {
    try {
      const TriangulatedPoint p = TriangulatePair(
          poses[obs[a].image], poses[obs[b].image], rays[a], rays[b]);
      if (!p.positive_depth) continue;
      sum += p.xyz;
      ++count;
    } catch (const Error&) {
    }
  }
  if (count == 0) return std::nullopt;
  return sum / count;
}

// Marks inliers; returns the inlier count and sets the mean inlier error.
int MarkInliers(ScenePoint& point, const MatchSet& match_set,
                std::span<const CameraModel> cameras, const PoseState& poses,
                double threshold) {
  int inliers = 0;
  double sum = 0.0;
  point.inlier.assign(point.observations.size(), false);
  for (std::size_t k = 0; k < point.observations.size(); ++k) {
    const Observation& o = point.observations[k];
    const Image& image = match_set.images[o.image];
    const auto px =
        ProjectToPixel(cameras[image.camera_id], poses[o.image], point.xyz);
    if (!px) continue;
    const double err = (*px - image.keypoints[o.keypoint]).norm();
    if (err <= threshold) {
      point.inlier[k] = true;
      sum += err;
      ++inliers;
    }
  }
  point.error = inliers > 0 ? sum / inliers : 0.0;
  return inliers;
}

}  // namespace

std::vector<ScenePoint> BuildPoints(const TrackSet& tracks,
                                    const MatchSet& match_set,
                                    std::span<const CameraModel> cameras,
                                    const PoseState& poses,
                                    const PipelineConfig& config,
                                    std::uint64_t seed) {
  const std::size_t num_tracks = tracks.tracks.size();
  std::vector<std::optional<ScenePoint>> slots(num_tracks);
  const double min_angle = DegToRad(config.triangulation_min_angle_deg);

  ParallelFor(num_tracks, [&](std::size_t t) {
    ScenePoint point;
    point.track = static_cast<int>(t);
    std::vector<Eigen::Vector3d> rays;
    for (const Observation& o : tracks.tracks[t]) {
      if (!poses[o.image].registered) continue;
      const Image& image = match_set.images[o.image];
      const Eigen::Vector2d x =
          NormalizeKeypoint(cameras[image.camera_id], image.keypoints[o.keypoint]);
      if (!x.allFinite()) continue;
      point.observations.push_back(o);
      rays.push_back(Homogeneous(x));
    }
    const int m = static_cast<int>(point.observations.size());
    if (m < config.triangulation_min_track_inliers || m < 2) return;

    Rng rng(seed ^ (0x9e3779b97f4a7c15ULL * (t + 1)));
    std::vector<int> all(m);
    for (int k = 0; k < m; ++k) all[k] = k;
    auto xyz = AveragePairs(all, rays, point.observations, poses,
                            config.triangulation_max_pairs, rng);
    if (!xyz) return;
    point.xyz = *xyz;
    MarkInliers(point, match_set, cameras, poses, config.reproj_outlier_px);

    // One refit on the inliers, then the final inlier set.
    std::vector<int> inliers;
    for (int k = 0; k < m; ++k) {
      if (point.inlier[k]) inliers.push_back(k);
    }
    if (static_cast<int>(inliers.size()) < config.triangulation_min_track_inliers ||
        inliers.size() < 2) {
      return;
    }
    xyz = AveragePairs(inliers, rays, point.observations, poses,
                       config.triangulation_max_pairs, rng);
    if (!xyz) return;
    point.xyz = *xyz;
    const int count =
        MarkInliers(point, match_set, cameras, poses, config.reproj_outlier_px);
    if (count < config.triangulation_min_track_inliers) return;

    double max_angle = 0.0;
    for (int a = 0; a < m; ++a) {
      if (!point.inlier[a]) continue;
      const Eigen::Vector3d da =
          point.xyz - poses[point.observations[a].image].center;
      for (int b = a + 1; b < m; ++b) {
        if (!point.inlier[b]) continue;
        const Eigen::Vector3d db =
            point.xyz - poses[point.observations[b].image].center;
        max_angle = std::max(max_angle, AngleBetween(da, db));
      }
    }
    if (max_angle < min_angle) return;
    slots[t] = std::move(point);
  });

  std::vector<ScenePoint> points;
  for (auto& s : slots) {
    if (s) points.push_back(std::move(*s));
  }
  return points;
}

}  // namespace fastmap
