#include "fastmap/distortion.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fastmap/error.h"
#include "fastmap/geometry.h"
#include "fastmap/parallel.h"
#include "fastmap/twoview.h"

namespace fastmap {

Eigen::Vector2d PixelToCentered(const CameraModel& camera,
                                const Eigen::Vector2d& pixel) {
  return (pixel - Eigen::Vector2d(camera.cx(), camera.cy())) /
         camera.HalfDiagonal();
}

Eigen::Vector2d CenteredToPixel(const CameraModel& camera,
                                const Eigen::Vector2d& centered) {
  return centered * camera.HalfDiagonal() +
         Eigen::Vector2d(camera.cx(), camera.cy());
}

std::optional<Eigen::Vector2d> Undistort(const Eigen::Vector2d& distorted,
                                         double alpha, double eps) {
  const double denom = 1.0 + alpha * distorted.squaredNorm();
  if (denom <= eps) return std::nullopt;
  return distorted / denom;
}

std::optional<Eigen::Vector2d> Distort(const Eigen::Vector2d& undistorted,
                                       double alpha) {
  const double ru = undistorted.norm();
  if (ru == 0.0) return undistorted;
  // Root of α ru rd² - rd + ru = 0 that is continuous at α = 0.
  const double disc = 1.0 - 4.0 * alpha * ru * ru;
  if (disc < 0.0) return std::nullopt;
  const double rd = 2.0 * ru / (1.0 + std::sqrt(disc));
  return undistorted * (rd / ru);
}

double ScoreAlpha(double alpha, std::span<const DistortionPair> pairs) {
  double sum = 0.0;
  std::size_t count = 0;
  std::vector<Eigen::Vector2d> a, b;
  for (const DistortionPair& pair : pairs) {
    const double alpha1 = pair.alpha1.value_or(alpha);
    const double alpha2 = pair.alpha2.value_or(alpha);
    a.clear();
    b.clear();
    for (std::size_t k = 0; k < pair.u1.size(); ++k) {
      const auto p = Undistort(pair.u1[k], alpha1);
      const auto q = Undistort(pair.u2[k], alpha2);
      if (!p || !q) continue;
      a.push_back(*p);
      b.push_back(*q);
    }
    if (a.size() < 8) continue;
    FundamentalEstimate est;
    try {
      est = EstimateFundamentalTrimmed(a, b);
    } catch (const Error&) {
      continue;
    }
    // Mean over the pairs the trimmed fit kept, so a few gross mismatches
    // do not dominate the comparison between candidates.
    std::vector<double> r(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      r[k] = EpipolarError(est.F, Homogeneous(a[k]), Homogeneous(b[k]));
    }
    std::vector<double> sorted = r;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2,
                     sorted.end());
    const double cut = 5.0 * sorted[sorted.size() / 2];
    for (double v : r) {
      if (v > cut) continue;
      sum += v;
      ++count;
    }
  }
  if (count == 0) throw Error("distortion: no usable pairs");
  return sum / static_cast<double>(count);
}

AlphaSearchResult SearchAlpha(std::span<const DistortionPair> pairs,
                              const PipelineConfig& config) {
  if (pairs.empty()) throw Error("distortion: no usable pairs");
  const int n = config.distortion_samples_per_level;
  double lo = config.distortion_min;
  double hi = config.distortion_max;
  AlphaSearchResult result;
  for (int level = 0; level < config.distortion_levels; ++level) {
    std::vector<double> samples(n);
    const double step = (hi - lo) / (n - 1);
    for (int k = 0; k < n; ++k) samples[k] = lo + step * k;
    std::vector<double> scores(n, std::numeric_limits<double>::infinity());
    ParallelFor(n, [&](std::size_t k) {
      try {
        scores[k] = ScoreAlpha(samples[k], pairs);
      } catch (const Error&) {
        // Candidate invalidates every pair; leave it at infinity.
      }
    });
    const int best = static_cast<int>(
        std::min_element(scores.begin(), scores.end()) - scores.begin());
    if (!std::isfinite(scores[best])) {
      throw Error("distortion: no usable pairs");
    }
    result.alpha = samples[best];
    result.level_best_score.push_back(scores[best]);
    result.level_spacing.push_back(step);
    lo = samples[std::max(best - 1, 0)];
    hi = samples[std::min(best + 1, n - 1)];
  }
  return result;
}

DistortionSchedule ScheduleCameras(const MatchSet& match_set,
                                   const PipelineConfig& config) {
  const int num_cameras = match_set.NumCameras();
  DistortionSchedule schedule;
  schedule.alpha.assign(num_cameras, 0.0);
  schedule.estimated.assign(num_cameras, false);
  schedule.ready_pairs.assign(num_cameras, 0);

  std::vector<CameraModel> cameras(num_cameras);
  for (const Image& image : match_set.images) {
    cameras[image.camera_id].id = image.camera_id;
    cameras[image.camera_id].width = image.width;
    cameras[image.camera_id].height = image.height;
  }

  std::vector<bool> done(num_cameras, false);
  auto is_ready = [&](const ImagePairMatches& pair, CameraId c) {
    if (pair.geometry != GeometryClass::kFundamental) return false;
    if (pair.correspondences.size() < 8) return false;
    const CameraId ci = match_set.images[pair.i].camera_id;
    const CameraId cj = match_set.images[pair.j].camera_id;
    if (ci == c && cj == c) return true;
    if (ci == c && cj != c) return static_cast<bool>(done[cj]);
    if (cj == c && ci != c) return static_cast<bool>(done[ci]);
    return false;
  };

  for (int round = 0; round < num_cameras; ++round) {
    int best = -1;
    int best_count = 0;
    for (CameraId c = 0; c < num_cameras; ++c) {
      if (done[c]) continue;
      int count = 0;
      for (const auto& pair : match_set.pairs) count += is_ready(pair, c);
      if (count > best_count) {
        best = c;
        best_count = count;
      }
    }
    if (best < 0) break;

    std::vector<DistortionPair> ready;
    for (const auto& pair : match_set.pairs) {
      if (!is_ready(pair, best)) continue;
      const Image& im1 = match_set.images[pair.i];
      const Image& im2 = match_set.images[pair.j];
      DistortionPair dp;
      if (im1.camera_id != best) dp.alpha1 = schedule.alpha[im1.camera_id];
      if (im2.camera_id != best) dp.alpha2 = schedule.alpha[im2.camera_id];
      dp.u1.reserve(pair.correspondences.size());
      dp.u2.reserve(pair.correspondences.size());
      for (const Correspondence& c : pair.correspondences) {
        dp.u1.push_back(
            PixelToCentered(cameras[im1.camera_id], im1.keypoints[c.kp1]));
        dp.u2.push_back(
            PixelToCentered(cameras[im2.camera_id], im2.keypoints[c.kp2]));
      }
      ready.push_back(std::move(dp));
    }
    schedule.order.push_back(best);
    schedule.ready_pairs[best] = best_count;
    done[best] = true;
    try {
      schedule.alpha[best] = SearchAlpha(ready, config).alpha;
      schedule.estimated[best] = true;
    } catch (const Error&) {
      schedule.alpha[best] = 0.0;
    }
  }
  return schedule;
}

}  // namespace fastmap
