#include <gtest/gtest.h>

#include "fastmap/config.h"
#include "fastmap/error.h"

namespace fastmap {
namespace {

TEST(Config, DefaultsMatchReferenceSettings) {
  const PipelineConfig c;
  EXPECT_EQ(c.distortion_levels, 3);
  EXPECT_EQ(c.distortion_samples_per_level, 10);
  EXPECT_EQ(c.focal_samples, 100);
  EXPECT_DOUBLE_EQ(c.tau, 0.01);
  EXPECT_DOUBLE_EQ(c.rotation_lr, 1e-4);
  EXPECT_DOUBLE_EQ(c.translation_lr, 1e-3);
  EXPECT_DOUBLE_EQ(c.epipolar_lr, 1e-4);
  EXPECT_EQ(c.translation_inits, 3);
  EXPECT_EQ(c.prune_rounds, 3);
  EXPECT_DOUBLE_EQ(c.prune_threshold_start, 0.01);
  EXPECT_DOUBLE_EQ(c.prune_threshold_end, 0.005);
  EXPECT_EQ(c.irls_iters_between_prunes, 3);
  EXPECT_DOUBLE_EQ(c.lr_decay, 2.0);
}

TEST(Config, ParsesKeysAndComments) {
  const PipelineConfig c = ParseConfig(
      "# comment\n"
      "rotation_steps = 10   # trailing\n"
      "\n"
      "tau=0.5\n"
      "focal_refine = false\n");
  EXPECT_EQ(c.rotation_steps, 10);
  EXPECT_DOUBLE_EQ(c.tau, 0.5);
  EXPECT_FALSE(c.focal_refine);
}

TEST(Config, RejectsUnknownAndMalformed) {
  EXPECT_THROW(ParseConfig("no_such_key = 1\n"), Error);
  EXPECT_THROW(ParseConfig("rotation_steps = ten\n"), Error);
  EXPECT_THROW(ParseConfig("rotation_steps\n"), Error);
  EXPECT_THROW(ParseConfig("rotation_steps = -1\n"), Error);
  EXPECT_THROW(ParseConfig("fov_min_deg = 170\n"), Error);
}

TEST(Config, SerializeRoundTrip) {
  PipelineConfig c;
  c.tau = 0.0123456789012345;
  c.translation_inits = 7;
  c.estimate_distortion = false;
  EXPECT_EQ(ParseConfig(SerializeConfig(c)), c);
}

TEST(Config, MissingFileThrows) {
  EXPECT_THROW(LoadConfig("/nonexistent/fastmap.cfg"), Error);
}

}  // namespace
}  // namespace fastmap
