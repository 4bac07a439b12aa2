#include <gtest/gtest.h>

#include <cmath>

#include "fastmap/geometry.h"
#include "fastmap/optim.h"
#include "fastmap/translation.h"
#include "test_util.h"

namespace fastmap {
namespace {

using testing::MakeTwoView;

double AngleDeg(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::acos(std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0)) *
         180.0 / M_PI;
}

// Centroid removed, unit RMS: the gauge of the direction loss has no
// rotational part, so this is a complete normal form.
std::vector<Eigen::Vector3d> Normalize(std::vector<Eigen::Vector3d> c) {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : c) mean += p;
  mean /= c.size();
  double ss = 0.0;
  for (auto& p : c) {
    p -= mean;
    ss += p.squaredNorm();
  }
  const double s = std::sqrt(ss / c.size());
  for (auto& p : c) p /= s;
  return c;
}

std::vector<DirectionEdge> Edges(const std::vector<Eigen::Vector3d>& centers,
                                 std::mt19937_64& gen, double noise_deg,
                                 double density = 1.0) {
  std::vector<DirectionEdge> edges;
  std::bernoulli_distribution keep(density);
  const int n = static_cast<int>(centers.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (j != i + 1 && !keep(gen)) continue;
      Eigen::Vector3d d = (centers[j] - centers[i]).normalized();
      if (noise_deg > 0.0) {
        d = testing::AxisAngle(DegToRad(noise_deg),
                               d.cross(testing::RandomUnit(gen))) *
            d;
      }
      edges.push_back({i, j, d});
    }
  }
  return edges;
}

TEST(Fibonacci, UnitAndSpread) {
  const auto pts = FibonacciSphere(1024);
  ASSERT_EQ(pts.size(), 1024u);
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (const auto& p : pts) {
    EXPECT_NEAR(p.norm(), 1.0, 1e-12);
    sum += p;
  }
  EXPECT_LE(sum.norm() / 1024, 1e-3);
}

TEST(ReestimateRelative, NoiseFreeWithinHalfDegree) {
  const PipelineConfig config;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 gen(seed);
    const auto tv = MakeTwoView(gen, 100);
    const auto r = ReestimateRelative(tv.R, tv.x1, tv.x2, config);
    ASSERT_EQ(r.status, RelTranslationStatus::kOk) << seed;
    EXPECT_LE(AngleDeg(r.t, tv.t), 0.5) << seed;
  }
}

TEST(ReestimateRelative, PureRotationRejected) {
  std::mt19937_64 gen(3);
  const auto tv = MakeTwoView(gen, 100, /*baseline=*/0.0);
  const auto r = ReestimateRelative(tv.R, tv.x1, tv.x2, PipelineConfig{});
  EXPECT_EQ(r.status, RelTranslationStatus::kFlat);
}

TEST(ReestimateRelative, EmptyHasNoInliers) {
  std::vector<Eigen::Vector3d> none;
  const auto r = ReestimateRelative(Eigen::Matrix3d::Identity(), none, none,
                                    PipelineConfig{});
  EXPECT_EQ(r.status, RelTranslationStatus::kNoInliers);
}

TEST(MeanTranslationError, SignSymmetric) {
  std::mt19937_64 gen(4);
  const auto tv = MakeTwoView(gen, 50);
  for (int k = 0; k < 20; ++k) {
    const Eigen::Vector3d t = testing::RandomUnit(gen);
    EXPECT_EQ(MeanTranslationError(tv.R, t, tv.x1, tv.x2),
              MeanTranslationError(tv.R, -t, tv.x1, tv.x2));
  }
}

TEST(WorldDirection, Examples) {
  const Eigen::Vector3d o =
      WorldDirection(Eigen::Matrix3d::Identity(), Eigen::Vector3d::UnitZ());
  EXPECT_EQ(o, Eigen::Vector3d(0, 0, -1));
  std::mt19937_64 gen(5);
  for (int k = 0; k < 20; ++k) {
    const Eigen::Matrix3d rj = testing::RandomRotation(gen);
    const Eigen::Vector3d ci = testing::RandomUnit(gen) * 3.0;
    const Eigen::Vector3d cj = testing::RandomUnit(gen) * 2.0;
    const Eigen::Vector3d t = (rj * (ci - cj)).normalized();
    const Eigen::Vector3d w = WorldDirection(rj, t);
    EXPECT_GE(w.dot((cj - ci).normalized()), 1.0 - 1e-9);
    EXPECT_LE((WorldDirection(rj, -t) + w).norm(), 1e-15);
  }
}

TEST(TranslationObjective, GaugeInvariant) {
  std::mt19937_64 gen(6);
  std::vector<Eigen::Vector3d> c;
  for (int k = 0; k < 8; ++k) c.push_back(testing::RandomUnit(gen) * 2.0);
  const auto edges = Edges(c, gen, 5.0, 0.7);
  Eigen::VectorXd x(24), y(24);
  const Eigen::Vector3d v(3.0, -1.0, 0.5);
  const double s = 7.3;
  std::normal_distribution<double> n;
  for (int k = 0; k < 8; ++k) {
    const Eigen::Vector3d p(n(gen), n(gen), n(gen));
    x.segment<3>(3 * k) = p;
    y.segment<3>(3 * k) = s * p + v;
  }
  EXPECT_NEAR(TranslationObjective(edges, x, nullptr),
              TranslationObjective(edges, y, nullptr), 1e-12);
}

TEST(TranslationObjective, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 gen(50 + seed);
    std::vector<Eigen::Vector3d> c;
    for (int k = 0; k < 6; ++k) c.push_back(testing::RandomUnit(gen));
    const auto edges = Edges(c, gen, 10.0);
    Eigen::VectorXd x(18);
    std::normal_distribution<double> n;
    for (int k = 0; k < 18; ++k) x(k) = n(gen);
    Eigen::VectorXd grad;
    TranslationObjective(edges, x, &grad);
    const auto f = [&](const Eigen::VectorXd& p) {
      return TranslationObjective(edges, p, nullptr);
    };
    EXPECT_LE(FdCheck(f, grad, x), 1e-4) << seed;
  }
}

TEST(AlignCenters, TetrahedronRecovered) {
  std::vector<Eigen::Vector3d> tet = {
      {1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
  const double edge = (tet[0] - tet[1]).norm();
  std::mt19937_64 gen(0);
  const auto edges = Edges(tet, gen, 0.0);
  const auto truth = Normalize(tet);
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    const AlignResult r = AlignCenters(4, edges, PipelineConfig{}, seed);
    const auto est = Normalize(r.centers);
    // Normalize() scales tet by 1/√3, edge length in that frame:
    const double scaled_edge = edge / std::sqrt(3.0);
    double worst = 0.0;
    for (int k = 0; k < 4; ++k) worst = std::max(worst, (est[k] - truth[k]).norm());
    EXPECT_LE(worst, 1e-3 * scaled_edge) << seed;
  }
}

TEST(MultiInitAlign, SingleInitIsAlignCenters) {
  std::mt19937_64 gen(8);
  std::vector<Eigen::Vector3d> c;
  for (int k = 0; k < 10; ++k) c.push_back(testing::RandomUnit(gen) * 3.0);
  const auto edges = Edges(c, gen, 2.0, 0.5);
  PipelineConfig config;
  config.translation_inits = 1;
  const auto multi = MultiInitAlign(10, edges, config, 42);
  const auto single = AlignCenters(10, edges, config, 42);
  EXPECT_EQ(multi.result.centers, single.centers);
  EXPECT_EQ(multi.result.final_loss, single.final_loss);
}

TEST(MultiInitAlign, MergedNoWorseThanWorstRun) {
  PipelineConfig config;
  config.translation_steps = 500;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 gen(1000 + seed);
    std::vector<Eigen::Vector3d> c;
    for (int k = 0; k < 12; ++k) c.push_back(testing::RandomUnit(gen) * 3.0);
    const auto edges = Edges(c, gen, 5.0, 0.4);
    const auto multi = MultiInitAlign(12, edges, config, seed);
    ASSERT_EQ(multi.runs.size(), 3u);
    double worst = 0.0;
    for (const auto& run : multi.runs) worst = std::max(worst, run.final_loss);
    EXPECT_LE(multi.result.final_loss, worst) << seed;
  }
}

TEST(Canonicalize, CentroidAndMeanNorm) {
  std::vector<Eigen::Vector3d> c = {{1, 2, 3}, {4, 0, 0}, {0, 0, 9}, {5, 5, 5}};
  std::vector<bool> active = {true, true, false, true};
  Canonicalize(c, active);
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  double norm = 0.0;
  for (int k : {0, 1, 3}) {
    mean += c[k];
    norm += c[k].norm();
  }
  EXPECT_LE(mean.norm(), 1e-12);
  EXPECT_NEAR(norm / 3, 1.0, 1e-12);
  EXPECT_EQ(c[2], Eigen::Vector3d(0, 0, 9));
}

}  // namespace
}  // namespace fastmap
