#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fastmap/io.h"
#include "fastmap/metrics.h"
#include "fastmap/pipeline.h"
#include "fastmap/synth.h"

namespace fastmap {
namespace {

namespace fs = std::filesystem;

SynthScene Scene(std::uint64_t seed, int images = 12) {
  SynthSpec spec;
  spec.num_images = images;
  spec.num_points = 300;
  spec.alpha = -0.1;
  spec.noise_px = 0.5;
  spec.outlier_frac = 0.02;
  spec.seed = seed;
  return Generate(spec);
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Pipeline, SmallRingReconstructs) {
  const SynthScene s = Scene(21);
  const PipelineResult r = RunPipeline(s.matches, PipelineConfig{}, 1);
  const MetricSummary m = Summarize(r.model.poses, s.gt.poses);
  EXPECT_EQ(m.rra1, 100.0);
  EXPECT_GE(m.rta3, 99.0);
  EXPECT_LE(m.ate, 0.01);
  EXPECT_FALSE(r.model.points.empty());
  // Stage names in order, each reported once.
  std::vector<std::string> names;
  for (const auto& st : r.stages) names.push_back(st.name);
  EXPECT_EQ(names.front().rfind("ingest", 0), 0u);
  const std::string report = FormatReport(r.stages);
  EXPECT_NE(report.find("seconds="), std::string::npos);
}

TEST(Pipeline, SameSeedIsByteIdentical) {
  const SynthScene s = Scene(22, 10);
  const fs::path root = fs::temp_directory_path() / "fastmap_pipeline_det";
  fs::remove_all(root);
  for (const char* run : {"a", "b"}) {
    const PipelineResult r = RunPipeline(s.matches, PipelineConfig{}, 5);
    WriteModel(r.model, (root / run).string());
  }
  for (const char* f : {"cameras.txt", "images.txt", "points3D.txt"}) {
    EXPECT_EQ(Slurp(root / "a" / f), Slurp(root / "b" / f)) << f;
  }
}

TEST(Pipeline, DisconnectedGraphFailsInPairFilter) {
  // Only disjoint pairs survive: every component has two images.
  const SynthScene s = Scene(23, 8);
  MatchSet m = s.matches;
  std::erase_if(m.pairs, [](const ImagePairMatches& p) {
    return !(p.i % 2 == 0 && p.j == p.i + 1);
  });
  ASSERT_EQ(m.pairs.size(), 4u);
  try {
    RunPipeline(m, PipelineConfig{}, 1);
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "rotation.filter_pairs");
    EXPECT_FALSE(e.completed().empty());
  }
}

TEST(Pipeline, SmallerComponentLeftUnregistered) {
  // Two equal scenes side by side with no pair between them; the first wins
  // the tie and the other images are dropped.
  const SynthScene a = Scene(23, 8);
  const SynthScene b = Scene(24, 8);
  MatchSet m = a.matches;
  const int offset = static_cast<int>(m.images.size());
  for (Image im : b.matches.images) {
    im.id += offset;
    im.name = "b_" + im.name;
    m.images.push_back(im);
  }
  for (ImagePairMatches p : b.matches.pairs) {
    p.i += offset;
    p.j += offset;
    m.pairs.push_back(p);
  }
  ASSERT_TRUE(Validate(m).empty());
  const PipelineResult r = RunPipeline(m, PipelineConfig{}, 1);
  for (int k = 0; k < 2 * offset; ++k) {
    EXPECT_EQ(r.model.poses[k].registered, k < offset) << k;
  }
  PoseState est(r.model.poses.begin(), r.model.poses.begin() + offset);
  EXPECT_LE(Ate(est, a.gt.poses), 0.01);
}

}  // namespace
}  // namespace fastmap
