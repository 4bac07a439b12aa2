#include <gtest/gtest.h>

#include "fastmap/error.h"
#include "fastmap/twoview.h"
#include "test_util.h"

namespace fastmap {
namespace {

using testing::Inhomogeneous;
using testing::MakeTwoView;

TEST(Fundamental, ExactProjectionsSatisfyConstraint) {
  std::mt19937_64 gen(1);
  const auto tv = MakeTwoView(gen, 20);
  const auto a = Inhomogeneous(tv.x1), b = Inhomogeneous(tv.x2);
  const FundamentalEstimate est = EstimateFundamental(a, b);
  EXPECT_FALSE(est.degenerate);
  EXPECT_NEAR(est.F.norm(), 1.0, 1e-12);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_LE(std::abs(tv.x2[k].dot(est.F * tv.x1[k])), 1e-9);
  }
  // Rank 2 and proportional to the true essential matrix.
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(est.F);
  EXPECT_LE(svd.singularValues()(2), 1e-12);
  Eigen::Matrix3d e = testing::SkewOf(tv.t) * tv.R;
  e /= e.norm();
  EXPECT_LT(std::min((e - est.F).norm(), (e + est.F).norm()), 1e-8);
}

TEST(Fundamental, CanonicalSignAndScale) {
  std::mt19937_64 gen(2);
  const auto tv = MakeTwoView(gen, 30);
  const auto a = Inhomogeneous(tv.x1), b = Inhomogeneous(tv.x2);
  const Eigen::Matrix3d f = EstimateFundamental(a, b).F;
  Eigen::Index r, c;
  f.cwiseAbs().maxCoeff(&r, &c);
  EXPECT_GT(f(r, c), 0.0);
}

TEST(Fundamental, TooFewPairsThrows) {
  std::vector<Eigen::Vector2d> a(7, Eigen::Vector2d::Zero());
  EXPECT_THROW(EstimateFundamental(a, a), Error);
}

TEST(Fundamental, PlanarSceneIsDegenerate) {
  std::mt19937_64 gen(3);
  const auto tv = MakeTwoView(gen, 40, 1.0, /*planar=*/true);
  const auto est =
      EstimateFundamental(Inhomogeneous(tv.x1), Inhomogeneous(tv.x2));
  EXPECT_TRUE(est.degenerate);
}

TEST(Fundamental, TrimmedRefitIgnoresGrossOutliers) {
  std::mt19937_64 gen(4);
  const auto tv = MakeTwoView(gen, 200);
  auto a = Inhomogeneous(tv.x1), b = Inhomogeneous(tv.x2);
  for (int k = 0; k < 6; ++k) std::swap(b[k], b[100 + k]);
  const Eigen::Matrix3d f = EstimateFundamentalTrimmed(a, b).F;
  for (std::size_t k = 10; k < 100; ++k) {
    EXPECT_LE(std::abs(tv.x2[k].dot(f * tv.x1[k])), 1e-9);
  }
}

TEST(Homography, ExactPlanarTransfer) {
  std::mt19937_64 gen(5);
  const auto tv = MakeTwoView(gen, 30, 1.0, true);
  const auto a = Inhomogeneous(tv.x1), b = Inhomogeneous(tv.x2);
  const Eigen::Matrix3d h = EstimateHomography(a, b);
  EXPECT_NEAR(h.norm(), 1.0, 1e-12);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_LE(TransferError(h, a[k], b[k]), 1e-9);
  }
}

TEST(EpipolarError, ZeroOnEpipolarLine) {
  const Eigen::Matrix3d f = testing::SkewOf(Eigen::Vector3d::UnitX());
  // With t along x, points on the same row are on each other's epipolar line.
  EXPECT_EQ(EpipolarError(f, {0.3, 0.2, 1}, {-0.5, 0.2, 1}), 0.0);
  EXPECT_GT(EpipolarError(f, {0.3, 0.2, 1}, {-0.5, 0.4, 1}), 0.0);
}

TEST(Essential, RecoversIdentityAndBaseline) {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Eigen::Vector3d> x1, x2;
  const Eigen::Vector3d t(1, 0, 0);
  for (int k = 0; k < 50; ++k) {
    const Eigen::Vector3d X(u(gen), u(gen), 4 + u(gen));
    x1.push_back(X / X.z());
    const Eigen::Vector3d y = X + t;
    x2.push_back(y / y.z());
  }
  const Eigen::Matrix3d e = testing::SkewOf(t);
  const RelativePose pose = DecomposeEssential(e, x1, x2);
  EXPECT_LE(testing::AngleOf(pose.rotation.matrix(), Eigen::Matrix3d::Identity()),
            1e-6);
  ASSERT_TRUE(pose.translation.has_value());
  EXPECT_GE(pose.translation->dot(t), 1.0 - 1e-9);
  EXPECT_FALSE(pose.tie);
}

TEST(Essential, RandomScenesPickTheTrueCandidate) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto tv = MakeTwoView(gen, 40);
    Eigen::Matrix3d e = testing::SkewOf(tv.t) * tv.R;
    const RelativePose pose = DecomposeEssential(-3.0 * e, tv.x1, tv.x2);
    EXPECT_LE(testing::AngleOf(pose.rotation.matrix(), tv.R), 1e-9);
    EXPECT_GE(pose.translation->dot(tv.t.normalized()), 1.0 - 1e-12);
    EXPECT_EQ(pose.support, 40);
  }
}

TEST(Essential, CandidateOrder) {
  std::mt19937_64 gen(8);
  const auto tv = MakeTwoView(gen, 10);
  const auto c = EssentialCandidates(testing::SkewOf(tv.t) * tv.R);
  EXPECT_LT((c[0].first - c[1].first).norm(), 1e-15);
  EXPECT_LT((c[0].second + c[1].second).norm(), 1e-15);
  EXPECT_LT((c[2].first - c[3].first).norm(), 1e-15);
  EXPECT_LT((c[2].second + c[3].second).norm(), 1e-15);
  EXPECT_GT(testing::AngleOf(c[0].first, c[2].first), 1.0);
}

TEST(Essential, ZeroMatrixThrows) {
  std::vector<Eigen::Vector3d> x = {{0, 0, 1}};
  EXPECT_THROW(DecomposeEssential(Eigen::Matrix3d::Zero(), x, x), Error);
}

TEST(Homography, PlanarSceneWithBaseline) {
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 10; ++trial) {
    const auto tv = MakeTwoView(gen, 60, 1.0, true);
    const Eigen::Matrix3d h =
        EstimateHomography(Inhomogeneous(tv.x1), Inhomogeneous(tv.x2));
    const RelativePose pose = DecomposeHomography(h, tv.x1, tv.x2);
    EXPECT_LE(testing::AngleOf(pose.rotation.matrix(), tv.R), 1e-5)
        << "trial " << trial;
    ASSERT_TRUE(pose.translation.has_value());
    EXPECT_GE(pose.translation->dot(tv.t.normalized()), 1.0 - 1e-6);
  }
}

TEST(Homography, PureRotationHasNoTranslation) {
  std::mt19937_64 gen(10);
  const Eigen::Matrix3d r = testing::AxisAngle(0.3, {0.2, 1.0, 0.1});
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Eigen::Vector3d> x1, x2;
  for (int k = 0; k < 30; ++k) {
    const Eigen::Vector3d X(u(gen), u(gen), 5 + u(gen));
    x1.push_back(X / X.z());
    const Eigen::Vector3d y = r * X;
    x2.push_back(y / y.z());
  }
  const Eigen::Matrix3d h = EstimateHomography(Inhomogeneous(x1), Inhomogeneous(x2));
  const RelativePose pose = DecomposeHomography(h, x1, x2);
  EXPECT_FALSE(pose.translation.has_value());
  EXPECT_LE(testing::AngleOf(pose.rotation.matrix(), r), 1e-8);
}

}  // namespace
}  // namespace fastmap
