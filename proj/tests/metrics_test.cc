#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "fastmap/error.h"
#include "fastmap/metrics.h"
#include "test_util.h"

namespace fastmap {
namespace {

Eigen::Matrix3d Rz(double deg) {
  return testing::AxisAngle(deg * M_PI / 180.0, Eigen::Vector3d::UnitZ());
}

std::vector<Eigen::Vector3d> RandomPoints(std::mt19937_64& gen, int n) {
  std::normal_distribution<double> g;
  std::vector<Eigen::Vector3d> p;
  for (int k = 0; k < n; ++k) p.emplace_back(g(gen), g(gen), g(gen));
  return p;
}

PoseState RandomPoses(std::mt19937_64& gen, int n) {
  PoseState poses(n);
  const auto centers = RandomPoints(gen, n);
  for (int k = 0; k < n; ++k) {
    poses[k].rotation = Rotation3::Project(testing::RandomRotation(gen));
    poses[k].center = 3.0 * centers[k];
    poses[k].registered = true;
  }
  return poses;
}

// Applies x -> s Q x + v to the world frame.
PoseState Moved(PoseState poses, double s, const Eigen::Matrix3d& q,
                const Eigen::Vector3d& v) {
  for (auto& p : poses) {
    p.rotation = Rotation3::Project(p.rotation.matrix() * q.transpose());
    p.center = s * q * p.center + v;
  }
  return poses;
}

TEST(Umeyama, RecoversKnownSimilarity) {
  std::mt19937_64 gen(1);
  const auto src = RandomPoints(gen, 20);
  std::vector<Eigen::Vector3d> dst;
  for (const auto& p : src) dst.push_back(2.0 * Rz(90) * p + Eigen::Vector3d(1, 2, 3));
  const Similarity s = UmeyamaAlign(src, dst);
  EXPECT_NEAR(s.scale, 2.0, 1e-10);
  EXPECT_LE((s.rotation.matrix() - Rz(90)).norm(), 1e-10);
  EXPECT_LE((s.translation - Eigen::Vector3d(1, 2, 3)).norm(), 1e-10);
}

TEST(Umeyama, IdentityOnEqualSets) {
  std::mt19937_64 gen(2);
  const auto p = RandomPoints(gen, 8);
  const Similarity s = UmeyamaAlign(p, p);
  EXPECT_NEAR(s.scale, 1.0, 1e-12);
  EXPECT_LE((s.rotation.matrix() - Eigen::Matrix3d::Identity()).norm(), 1e-12);
  EXPECT_LE(s.translation.norm(), 1e-12);
}

TEST(Umeyama, DegenerateInputThrows) {
  std::vector<Eigen::Vector3d> line;
  for (int k = 0; k < 5; ++k) line.emplace_back(k, 2.0 * k, -k);
  EXPECT_THROW(UmeyamaAlign(line, line), Error);
  const std::vector<Eigen::Vector3d> two = {{0, 0, 0}, {1, 0, 0}};
  EXPECT_THROW(UmeyamaAlign(two, two), Error);
}

// gt normalized to unit mean distance from its centroid, then aligned with
// the independent Umeyama in test_util.
double AteOracle(const PoseState& est, const PoseState& gt) {
  std::vector<Eigen::Vector3d> a, b;
  for (std::size_t k = 0; k < gt.size(); ++k) {
    if (!est[k].registered || !gt[k].registered) continue;
    a.push_back(est[k].center);
    b.push_back(gt[k].center);
  }
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : b) mean += p / b.size();
  double d = 0.0;
  for (const auto& p : b) d += (p - mean).norm() / b.size();
  for (auto& p : b) p = (p - mean) / d;
  const auto mapped = testing::AlignedPoints(a, b);
  double ss = 0.0;
  for (std::size_t k = 0; k < b.size(); ++k) ss += (mapped[k] - b[k]).squaredNorm();
  return std::sqrt(ss / b.size());
}

TEST(Ate, SimilarityOfGroundTruthIsZero) {
  std::mt19937_64 gen(3);
  const PoseState gt = RandomPoses(gen, 10);
  const PoseState est =
      Moved(gt, 0.3, testing::RandomRotation(gen), Eigen::Vector3d(5, -1, 2));
  EXPECT_LE(Ate(est, gt), 1e-10);
}

TEST(Ate, OneDisplacedCenter) {
  // Ring of 10 with unit radius is already normalized. Moving one center by
  // 0.1 gives 0.1/√10 before alignment; the fit can only lower it.
  PoseState gt(10);
  for (int k = 0; k < 10; ++k) {
    const double a = 2.0 * M_PI * k / 10;
    gt[k].center = Eigen::Vector3d(std::cos(a), std::sin(a), 0.0);
    gt[k].registered = true;
  }
  PoseState est = gt;
  est[0].center += Eigen::Vector3d(0, 0, 0.1);
  const double ate = Ate(est, gt);
  EXPECT_NEAR(ate, AteOracle(est, gt), 1e-12);
  EXPECT_LE(ate, 0.1 / std::sqrt(10.0) + 1e-12);
  EXPECT_GE(ate, 0.025);
}

TEST(Ate, MatchesOracleAndSkipsUnregistered) {
  std::mt19937_64 gen(4);
  const PoseState gt = RandomPoses(gen, 12);
  PoseState est = Moved(gt, 2.0, testing::RandomRotation(gen), {1, 1, 1});
  std::normal_distribution<double> g(0.0, 0.05);
  for (auto& p : est) p.center += Eigen::Vector3d(g(gen), g(gen), g(gen));
  EXPECT_NEAR(Ate(est, gt), AteOracle(est, gt), 1e-12);
  // A wildly wrong but unregistered image changes nothing.
  PoseState worse = est;
  worse[5].center = Eigen::Vector3d(1e6, 0, 0);
  worse[5].registered = false;
  EXPECT_NEAR(Ate(worse, gt), AteOracle(worse, gt), 1e-12);
  PoseState dropped_gt = gt, dropped_est = est;
  dropped_gt.erase(dropped_gt.begin() + 5);
  dropped_est.erase(dropped_est.begin() + 5);
  EXPECT_NEAR(Ate(worse, gt), Ate(dropped_est, dropped_gt), 1e-12);
}

TEST(RelativeErrors, SingleRotatedCamera) {
  std::mt19937_64 gen(5);
  const int n = 8;
  const PoseState gt = RandomPoses(gen, n);
  PoseState est = gt;
  est[3].rotation = Rotation3::Project(
      testing::AxisAngle(2.0 * M_PI / 180.0, testing::RandomUnit(gen)) *
      est[3].rotation.matrix());
  const PairErrors e = RelativeErrors(est, gt);
  ASSERT_EQ(e.rotation_deg.size(), static_cast<std::size_t>(n * (n - 1) / 2));
  int at_two = 0, at_zero = 0;
  for (double r : e.rotation_deg) {
    if (std::abs(r - 2.0) <= 1e-6) ++at_two;
    if (r <= 1e-6) ++at_zero;
  }
  EXPECT_EQ(at_two, n - 1);
  EXPECT_EQ(at_zero, n * (n - 1) / 2 - (n - 1));
}

TEST(RelativeErrors, InvariantToGlobalSimilarity) {
  std::mt19937_64 gen(6);
  const PoseState gt = RandomPoses(gen, 9);
  PoseState est = gt;
  std::normal_distribution<double> g(0.0, 0.05);
  for (auto& p : est) {
    p.center += Eigen::Vector3d(g(gen), g(gen), g(gen));
    p.rotation = Rotation3::Project(
        testing::AxisAngle(0.02, testing::RandomUnit(gen)) * p.rotation.matrix());
  }
  const PoseState moved =
      Moved(est, 4.5, testing::RandomRotation(gen), Eigen::Vector3d(-3, 7, 1));
  const PairErrors a = RelativeErrors(est, gt);
  const PairErrors b = RelativeErrors(moved, gt);
  ASSERT_EQ(a.combined_deg.size(), b.combined_deg.size());
  for (std::size_t k = 0; k < a.combined_deg.size(); ++k) {
    EXPECT_NEAR(a.rotation_deg[k], b.rotation_deg[k], 1e-9);
    EXPECT_NEAR(a.translation_deg[k], b.translation_deg[k], 1e-9);
    EXPECT_NEAR(a.combined_deg[k], b.combined_deg[k], 1e-9);
  }
}

TEST(RelativeErrors, UnregisteredCountsAsInfinite) {
  std::mt19937_64 gen(7);
  const PoseState gt = RandomPoses(gen, 5);
  PoseState est = gt;
  est[2].registered = false;
  const PairErrors e = RelativeErrors(est, gt);
  int inf = 0;
  for (double r : e.combined_deg) inf += std::isinf(r);
  EXPECT_EQ(inf, 4);
  EXPECT_EQ(e.combined_deg.size(), 10u);
}

TEST(Recall, Examples) {
  const std::vector<double> e = {0.5, 1.5, 3.5};
  EXPECT_NEAR(RecallAt(e, 3.0), 200.0 / 3.0, 1e-12);
  const std::vector<double> zeros(7, 0.0);
  EXPECT_EQ(RecallAt(zeros, 1.0), 100.0);
  // Strict comparison.
  const std::vector<double> edge = {1.0};
  EXPECT_EQ(RecallAt(edge, 1.0), 0.0);
  EXPECT_THROW(RecallAt({}, 1.0), Error);
  EXPECT_THROW(RecallAt(e, 0.0), Error);
}

TEST(Auc, Examples) {
  const std::vector<double> e = {0.5, 1.5, 2.5};
  EXPECT_NEAR(AucAt(e, 3.0), 50.0, 1e-12);
  const std::vector<double> zeros(4, 0.0);
  EXPECT_NEAR(AucAt(zeros, 3.0), 100.0, 1e-12);
  const std::vector<double> with_inf = {
      0.0, std::numeric_limits<double>::infinity()};
  EXPECT_NEAR(AucAt(with_inf, 3.0), 50.0, 1e-12);
  EXPECT_THROW(AucAt({}, 3.0), Error);
  EXPECT_THROW(AucAt(e, -1.0), Error);
}

TEST(Auc, NeverAboveRecall) {
  std::mt19937_64 gen(8);
  std::exponential_distribution<double> x(0.5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> e;
    for (int k = 0; k < 30; ++k) e.push_back(x(gen));
    // Numerical integral of recall over [0, δ] as an independent check.
    const double delta = 3.0;
    double integral = 0.0;
    const int steps = 30000;
    for (int s = 0; s < steps; ++s) {
      integral += RecallAt(e, (s + 0.5) * delta / steps) / steps;
    }
    const double auc = AucAt(e, delta);
    EXPECT_NEAR(auc, integral, 0.01);
    EXPECT_LE(auc, RecallAt(e, delta) + 1e-12);
  }
}

TEST(Summarize, GroundTruthAgainstItself) {
  std::mt19937_64 gen(9);
  const PoseState gt = RandomPoses(gen, 6);
  const MetricSummary s = Summarize(gt, gt);
  EXPECT_LE(s.ate, 1e-12);
  EXPECT_EQ(s.rra1, 100.0);
  EXPECT_EQ(s.rta1, 100.0);
  EXPECT_NEAR(s.auc3, 100.0, 1e-6);
}

}  // namespace
}  // namespace fastmap
