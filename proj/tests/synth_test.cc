#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fastmap/error.h"
#include "fastmap/focal.h"
#include "fastmap/geometry.h"
#include "fastmap/io.h"
#include "fastmap/reconstruct.h"
#include "fastmap/synth.h"
#include "test_util.h"

namespace fastmap {
namespace {

SynthSpec Ring(double alpha = 0.0) {
  SynthSpec spec;
  spec.num_images = 30;
  spec.num_points = 500;
  spec.alpha = alpha;
  spec.seed = 1;
  return spec;
}

Eigen::Matrix3d GtEssential(const SceneModel& gt, int i, int j) {
  const Eigen::Matrix3d ri = gt.poses[i].rotation.matrix();
  const Eigen::Matrix3d rj = gt.poses[j].rotation.matrix();
  const Eigen::Vector3d t = rj * (gt.poses[i].center - gt.poses[j].center);
  return testing::SkewOf(t.normalized()) * rj * ri.transpose();
}

TEST(Generate, GroundTruthEssentialIsValid) {
  const SynthScene s = Generate(Ring(-0.2));
  const CameraModel& cam = s.gt.cameras[0];
  const Eigen::Matrix3d k_inv =
      Eigen::Vector3d(1.0 / cam.focal, 1.0 / cam.focal, 1.0).asDiagonal();
  double worst_validity = 1.0, worst_residual = 0.0;
  for (const auto& pair : s.matches.pairs) {
    const Eigen::Matrix3d e = GtEssential(s.gt, pair.i, pair.j);
    const Eigen::Matrix3d f = k_inv * e * k_inv;  // centered pixels
    worst_validity = std::min(
        worst_validity, EssentialValidity(f, cam.focal, cam.focal, 0.01));
    for (const auto& c : pair.correspondences) {
      const Eigen::Vector2d a =
          NormalizeKeypoint(cam, s.matches.images[pair.i].keypoints[c.kp1]);
      const Eigen::Vector2d b =
          NormalizeKeypoint(cam, s.matches.images[pair.j].keypoints[c.kp2]);
      worst_residual = std::max(
          worst_residual,
          std::abs(b.homogeneous().dot(e * a.homogeneous())));
    }
  }
  EXPECT_NEAR(worst_validity, 1.0, 1e-9);
  // Noise free: keypoints are exact distorted projections.
  EXPECT_LE(worst_residual, 1e-9);
}

TEST(Generate, Deterministic) {
  SynthSpec spec = Ring(-0.1);
  spec.noise_px = 0.5;
  spec.outlier_frac = 0.05;
  std::stringstream a, b;
  WriteMatches(Generate(spec).matches, a);
  WriteMatches(Generate(spec).matches, b);
  EXPECT_EQ(a.str(), b.str());
  spec.seed = 2;
  std::stringstream c;
  WriteMatches(Generate(spec).matches, c);
  EXPECT_NE(a.str(), c.str());
}

TEST(Generate, NoiseStatistics) {
  SynthSpec spec = Ring(-0.1);
  spec.noise_px = 0.7;
  const SynthScene s = Generate(spec);
  double ss = 0.0, sum = 0.0;
  long n = 0, within = 0;
  for (const auto& pt : s.gt.points) {
    for (const auto& o : pt.observations) {
      const auto px = ProjectToPixel(s.gt.cameras[0], s.gt.poses[o.image], pt.xyz);
      ASSERT_TRUE(px);
      const Eigen::Vector2d r =
          s.matches.images[o.image].keypoints[o.keypoint] - *px;
      for (int d = 0; d < 2; ++d) {
        sum += r(d);
        ss += r(d) * r(d);
        within += std::abs(r(d)) <= 3.0 * spec.noise_px;
        ++n;
      }
    }
  }
  ASSERT_GT(n, 10000);
  EXPECT_NEAR(std::sqrt(ss / n), spec.noise_px, 0.03 * spec.noise_px);
  EXPECT_NEAR(sum / n, 0.0, 0.03 * spec.noise_px);
  // 99.73% for a normal; allow sampling slack.
  EXPECT_GE(static_cast<double>(within) / n, 0.995);
}

TEST(Generate, OutlierFraction) {
  SynthSpec spec = Ring();
  spec.num_images = 12;
  spec.outlier_frac = 0.1;
  const SynthScene s = Generate(spec);
  const CameraModel& cam = s.gt.cameras[0];
  long total = 0, bad = 0;
  for (const auto& pair : s.matches.pairs) {
    const Eigen::Matrix3d e = GtEssential(s.gt, pair.i, pair.j);
    for (const auto& c : pair.correspondences) {
      const Eigen::Vector2d a =
          NormalizeKeypoint(cam, s.matches.images[pair.i].keypoints[c.kp1]);
      const Eigen::Vector2d b =
          NormalizeKeypoint(cam, s.matches.images[pair.j].keypoints[c.kp2]);
      bad += std::abs(b.homogeneous().dot(e * a.homogeneous())) > 1e-6;
      ++total;
    }
  }
  EXPECT_NEAR(static_cast<double>(bad) / total, 0.1, 0.01);
}

TEST(Generate, EveryImageRegisteredAndValid) {
  const SynthScene s = Generate(Ring());
  EXPECT_TRUE(Validate(s.matches).empty());
  for (const auto& p : s.gt.poses) EXPECT_TRUE(p.registered);
  for (const auto& pt : s.gt.points) EXPECT_GE(pt.observations.size(), 2u);
}

TEST(Generate, TooFewVisiblePointsThrows) {
  SynthSpec spec = Ring();
  spec.num_points = 20;
  EXPECT_THROW(Generate(spec), Error);
}

TEST(LookAt, OpticalAxisHitsTarget) {
  const Eigen::Vector3d c(4, 1, 0.5), target(0.1, -0.2, 0.0);
  const Rotation3 r = LookAt(c, target);
  const Eigen::Vector3d y = r * (target - c);
  EXPECT_LE(std::hypot(y.x(), y.y()), 1e-12);
  EXPECT_GT(y.z(), 0.0);
  EXPECT_NEAR(r.matrix().determinant(), 1.0, 1e-12);
}

TEST(ParseLayout, Names) {
  EXPECT_EQ(ParseLayout("ring"), Layout::kRing);
  EXPECT_EQ(ParseLayout("grid"), Layout::kGrid);
  EXPECT_EQ(ParseLayout("random"), Layout::kRandom);
  EXPECT_THROW(ParseLayout("spiral"), Error);
}

}  // namespace
}  // namespace fastmap
