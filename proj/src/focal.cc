#include "fastmap/focal.h"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "fastmap/distortion.h"
#include "fastmap/error.h"
#include "fastmap/geometry.h"
#include "fastmap/parallel.h"
#include "fastmap/twoview.h"

namespace fastmap {

double EssentialValidity(const Eigen::Matrix3d& F, double focal1,
                         double focal2, double tau) {
  if (!F.allFinite()) throw Error("focal: non-finite fundamental matrix");
  if (focal1 <= 0.0 || focal2 <= 0.0) throw Error("focal: f must be > 0");
  const Eigen::Vector3d k1(focal1, focal1, 1.0);
  const Eigen::Vector3d k2(focal2, focal2, 1.0);
  const Eigen::Matrix3d e = k2.asDiagonal() * F * k1.asDiagonal();
  const Eigen::Vector3d s = Eigen::JacobiSVD<Eigen::Matrix3d>(e).singularValues();
  if (s(1) <= 0.0) return 0.0;
  return std::exp((1.0 - s(0) / s(1)) / tau);
}

double FocalFromFov(double fov_deg, int width) {
  return 0.5 * width / std::tan(0.5 * DegToRad(fov_deg));
}

namespace {

std::vector<double> FovSamples(const PipelineConfig& config) {
  std::vector<double> fov(config.focal_samples);
  if (config.focal_samples == 1) {
    fov[0] = 0.5 * (config.fov_min_deg + config.fov_max_deg);
    return fov;
  }
  const double step =
      (config.fov_max_deg - config.fov_min_deg) / (config.focal_samples - 1);
  for (int k = 0; k < config.focal_samples; ++k) {
    fov[k] = config.fov_min_deg + step * k;
  }
  return fov;
}

}  // namespace

FocalVote VoteFocal(std::span<const Eigen::Matrix3d> fundamentals, int width,
                    const PipelineConfig& config) {
  if (fundamentals.empty()) throw Error("focal underdetermined");
  FocalVote vote;
  vote.fov_samples = FovSamples(config);
  vote.scores.assign(vote.fov_samples.size(), 0.0);
  ParallelFor(vote.fov_samples.size(), [&](std::size_t k) {
    const double f = FocalFromFov(vote.fov_samples[k], width);
    double sum = 0.0;
    for (const auto& F : fundamentals) {
      sum += EssentialValidity(F, f, f, config.tau);
    }
    vote.scores[k] = sum;
  });
  const auto best = std::max_element(vote.scores.begin(), vote.scores.end()) -
                    vote.scores.begin();
  vote.fov_deg = vote.fov_samples[best];
  vote.focal = FocalFromFov(vote.fov_deg, width);
  return vote;
}

FocalSchedule VoteFocalMulti(std::span<const FocalPair> pairs,
                             std::span<const CameraModel> cameras,
                             const PipelineConfig& config) {
  const int num_cameras = static_cast<int>(cameras.size());
  FocalSchedule schedule;
  schedule.focal.resize(num_cameras);
  schedule.estimated.assign(num_cameras, false);
  for (int c = 0; c < num_cameras; ++c) {
    schedule.focal[c] = FocalFromFov(config.fallback_fov_deg, cameras[c].width);
  }
  std::vector<bool> done(num_cameras, false);
  auto is_ready = [&](const FocalPair& p, CameraId c) {
    if (p.camera1 == c && p.camera2 == c) return true;
    if (p.camera1 == c) return static_cast<bool>(done[p.camera2]);
    if (p.camera2 == c) return static_cast<bool>(done[p.camera1]);
    return false;
  };
  const std::vector<double> fov = FovSamples(config);

  for (int round = 0; round < num_cameras; ++round) {
    int best = -1;
    int best_count = 0;
    for (CameraId c = 0; c < num_cameras; ++c) {
      if (done[c]) continue;
      int count = 0;
      for (const auto& p : pairs) count += is_ready(p, c);
      if (count > best_count) {
        best = c;
        best_count = count;
      }
    }
    if (best < 0) break;
    std::vector<const FocalPair*> ready;
    for (const auto& p : pairs) {
      if (is_ready(p, best)) ready.push_back(&p);
    }
    std::vector<double> scores(fov.size(), 0.0);
    ParallelFor(fov.size(), [&](std::size_t k) {
      const double f = FocalFromFov(fov[k], cameras[best].width);
      double sum = 0.0;
      for (const FocalPair* p : ready) {
        const double f1 = p->camera1 == best ? f : schedule.focal[p->camera1];
        const double f2 = p->camera2 == best ? f : schedule.focal[p->camera2];
        sum += EssentialValidity(p->F, f1, f2, config.tau);
      }
      scores[k] = sum;
    });
    const auto arg =
        std::max_element(scores.begin(), scores.end()) - scores.begin();
    schedule.focal[best] = FocalFromFov(fov[arg], cameras[best].width);
    schedule.estimated[best] = true;
    schedule.order.push_back(best);
    done[best] = true;
  }
  return schedule;
}

std::vector<FocalPair> BuildFocalPairs(const MatchSet& match_set,
                                       std::span<const CameraModel> cameras) {
  std::vector<FocalPair> out(match_set.pairs.size());
  std::vector<bool> ok(match_set.pairs.size(), false);
  ParallelFor(match_set.pairs.size(), [&](std::size_t k) {
    const ImagePairMatches& pair = match_set.pairs[k];
    if (pair.geometry != GeometryClass::kFundamental) return;
    const Image& im1 = match_set.images[pair.i];
    const Image& im2 = match_set.images[pair.j];
    const CameraModel& c1 = cameras[im1.camera_id];
    const CameraModel& c2 = cameras[im2.camera_id];
    std::vector<Eigen::Vector2d> a, b;
    for (std::size_t m = 0; m < pair.num_original; ++m) {
      const Correspondence& c = pair.correspondences[m];
      const auto p = Undistort(PixelToCentered(c1, im1.keypoints[c.kp1]), c1.alpha);
      const auto q = Undistort(PixelToCentered(c2, im2.keypoints[c.kp2]), c2.alpha);
      if (!p || !q) continue;
      a.push_back(*p * c1.HalfDiagonal());
      b.push_back(*q * c2.HalfDiagonal());
    }
    if (a.size() < 8) return;
    try {
      out[k].F = EstimateFundamentalTrimmed(a, b).F;
    } catch (const Error&) {
      return;
    }
    out[k].camera1 = im1.camera_id;
    out[k].camera2 = im2.camera_id;
    ok[k] = true;
  });
  std::vector<FocalPair> result;
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (ok[k]) result.push_back(out[k]);
  }
  return result;
}

Eigen::Vector2d NormalizeKeypoint(const CameraModel& camera,
                                  const Eigen::Vector2d& pixel) {
  const auto u = Undistort(PixelToCentered(camera, pixel), camera.alpha);
  if (!u) return Eigen::Vector2d::Constant(std::nan(""));
  return *u * (camera.HalfDiagonal() / camera.focal);
}

CalibratedMatches ApplyCalibration(const MatchSet& match_set,
                                   std::span<const CameraModel> cameras) {
  CalibratedMatches out;
  out.keypoints.resize(match_set.images.size());
  for (const Image& image : match_set.images) {
    auto& kps = out.keypoints[image.id];
    kps.reserve(image.keypoints.size());
    for (const auto& p : image.keypoints) {
      kps.push_back(NormalizeKeypoint(cameras[image.camera_id], p));
    }
  }
  out.pairs.resize(match_set.pairs.size());
  ParallelFor(match_set.pairs.size(), [&](std::size_t k) {
    const ImagePairMatches& pair = match_set.pairs[k];
    CalibratedPair& cp = out.pairs[k];
    cp.i = pair.i;
    cp.j = pair.j;
    cp.geometry = pair.geometry;
    std::vector<Eigen::Vector2d> a, b;
    for (const Correspondence& c : pair.correspondences) {
      const Eigen::Vector2d& p = out.keypoints[pair.i][c.kp1];
      const Eigen::Vector2d& q = out.keypoints[pair.j][c.kp2];
      if (!p.allFinite() || !q.allFinite()) continue;
      cp.correspondences.push_back(c);
      cp.x1.push_back(Homogeneous(p));
      cp.x2.push_back(Homogeneous(q));
      a.push_back(p);
      b.push_back(q);
    }
    try {
      if (pair.geometry == GeometryClass::kFundamental && a.size() >= 8) {
        cp.model = EstimateFundamentalTrimmed(a, b).F;
        cp.fitted = true;
      } else if (pair.geometry == GeometryClass::kHomography && a.size() >= 4) {
        cp.model = EstimateHomography(a, b);
        cp.fitted = true;
      }
    } catch (const Error&) {
      cp.fitted = false;
    }
  });
  return out;
}

}  // namespace fastmap
