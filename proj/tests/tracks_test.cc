#include <gtest/gtest.h>

#include <algorithm>

#include "fastmap/tracks.h"

namespace fastmap {
namespace {

// Images with 10 keypoints each; pairs given as (i, j, kp1, kp2).
MatchSet Make(int num_images,
              std::vector<std::array<int, 4>> matches) {
  MatchSet m;
  for (int k = 0; k < num_images; ++k) {
    Image im;
    im.id = k;
    im.width = 100;
    im.height = 100;
    im.name = "im" + std::to_string(k);
    for (int p = 0; p < 10; ++p) im.keypoints.emplace_back(p, p);
    m.images.push_back(im);
  }
  for (const auto& [i, j, a, b] : matches) {
    auto it = std::find_if(m.pairs.begin(), m.pairs.end(),
                           [&](const auto& p) { return p.i == i && p.j == j; });
    if (it == m.pairs.end()) {
      ImagePairMatches p;
      p.i = i;
      p.j = j;
      m.pairs.push_back(p);
      it = m.pairs.end() - 1;
    }
    it->correspondences.push_back({a, b});
    it->num_original = it->correspondences.size();
  }
  return m;
}

constexpr int A = 0, B = 1, C = 2;

TEST(BuildTracks, ChainJoinsIntoOneTrack) {
  const TrackSet t = BuildTracks(Make(3, {{A, B, 1, 2}, {B, C, 2, 3}}));
  ASSERT_EQ(t.tracks.size(), 1u);
  EXPECT_EQ(t.tracks[0],
            (std::vector<Observation>{{A, 1}, {B, 2}, {C, 3}}));
  EXPECT_EQ(t.TrackOf({C, 3}), 0);
  EXPECT_EQ(t.TrackOf({C, 4}), -1);
}

TEST(BuildTracks, DisjointMatchesTwoTracks) {
  const TrackSet t = BuildTracks(Make(3, {{A, B, 1, 2}, {B, C, 5, 6}}));
  EXPECT_EQ(t.tracks.size(), 2u);
}

TEST(BuildTracks, SameImageConflictDropped) {
  const TrackSet t = BuildTracks(Make(2, {{A, B, 1, 2}, {A, B, 5, 2}}));
  EXPECT_TRUE(t.tracks.empty());
  EXPECT_EQ(t.TrackOf({A, 1}), -1);
  EXPECT_EQ(t.TrackOf({B, 2}), -1);
}

TEST(CompleteMatches, AddsMissingLink) {
  const MatchSet m = Make(3, {{A, B, 1, 2}, {B, C, 2, 3}});
  const MatchSet out = CompleteMatches(BuildTracks(m), m);
  ASSERT_EQ(out.pairs.size(), 3u);
  // Originals untouched.
  EXPECT_EQ(out.pairs[0], m.pairs[0]);
  EXPECT_EQ(out.pairs[1], m.pairs[1]);
  const ImagePairMatches& added = out.pairs[2];
  EXPECT_EQ(added.i, A);
  EXPECT_EQ(added.j, C);
  EXPECT_TRUE(added.synthetic_from_tracks);
  EXPECT_EQ(added.num_original, 0u);
  EXPECT_EQ(added.correspondences,
            (std::vector<Correspondence>{{1, 3}}));
}

int CountCorrespondences(const MatchSet& m) {
  int n = 0;
  for (const auto& p : m.pairs) n += static_cast<int>(p.correspondences.size());
  return n;
}

TEST(CompleteMatches, FiveTrackGivesAllTenPairs) {
  // Star around image 0.
  const MatchSet m =
      Make(5, {{0, 1, 0, 0}, {0, 2, 0, 0}, {0, 3, 0, 0}, {0, 4, 0, 0}});
  const MatchSet out = CompleteMatches(BuildTracks(m), m);
  EXPECT_EQ(CountCorrespondences(out), 10);
  EXPECT_EQ(out.pairs.size(), 10u);
}

TEST(CompleteMatches, Idempotent) {
  const MatchSet m = Make(
      4, {{0, 1, 0, 0}, {1, 2, 0, 1}, {2, 3, 1, 2}, {0, 2, 4, 4}, {1, 3, 7, 8}});
  const MatchSet once = CompleteMatches(BuildTracks(m), m);
  const MatchSet twice = CompleteMatches(BuildTracks(once), once);
  EXPECT_EQ(once, twice);
}

TEST(CompleteMatches, PartitionUnchanged) {
  const MatchSet m = Make(
      4, {{0, 1, 0, 0}, {1, 2, 0, 1}, {2, 3, 1, 2}, {0, 2, 4, 4}, {1, 3, 7, 8}});
  const TrackSet before = BuildTracks(m);
  const TrackSet after = BuildTracks(CompleteMatches(before, m));
  EXPECT_EQ(before.tracks, after.tracks);
}

TEST(CompleteMatches, LargeTracksKeepOriginalEdges) {
  const MatchSet m = Make(4, {{0, 1, 0, 0}, {1, 2, 0, 0}, {2, 3, 0, 0}});
  const MatchSet out = CompleteMatches(BuildTracks(m), m, 3);
  EXPECT_EQ(out, m);
}

}  // namespace
}  // namespace fastmap
