#include "fastmap/tracks.h"

#include <algorithm>
#include <map>
#include <set>

#include "fastmap/union_find.h"

namespace fastmap {

TrackSet BuildTracks(const MatchSet& match_set) {
  const std::size_t num_images = match_set.images.size();
  std::vector<std::size_t> offset(num_images + 1, 0);
  for (std::size_t k = 0; k < num_images; ++k) {
    offset[k + 1] = offset[k] + match_set.images[k].keypoints.size();
  }
  UnionFind uf(offset.back());
  for (const auto& pair : match_set.pairs) {
    for (const auto& c : pair.correspondences) {
      uf.Union(offset[pair.i] + c.kp1, offset[pair.j] + c.kp2);
    }
  }

  // Group by root; roots are the smallest node id, so iterating nodes in
  // order yields a deterministic track order.
  std::map<std::size_t, std::vector<Observation>> groups;
  for (std::size_t image = 0; image < num_images; ++image) {
    for (std::size_t kp = 0; kp < match_set.images[image].keypoints.size();
         ++kp) {
      const std::size_t node = offset[image] + kp;
      if (uf.SizeOf(node) < 2) continue;
      groups[uf.Find(node)].push_back(
          {static_cast<ImageId>(image), static_cast<int>(kp)});
    }
  }

  TrackSet out;
  out.keypoint_track.resize(num_images);
  for (std::size_t image = 0; image < num_images; ++image) {
    out.keypoint_track[image].assign(match_set.images[image].keypoints.size(),
                                     -1);
  }
  for (auto& [root, members] : groups) {
    bool conflict = false;
    for (std::size_t k = 1; k < members.size(); ++k) {
      if (members[k].image == members[k - 1].image) conflict = true;
    }
    if (conflict) continue;
    const int id = static_cast<int>(out.tracks.size());
    for (const auto& obs : members) {
      out.keypoint_track[obs.image][obs.keypoint] = id;
    }
    out.tracks.push_back(std::move(members));
  }
  return out;
}

MatchSet CompleteMatches(const TrackSet& track_set, const MatchSet& match_set,
                         int max_track_size) {
  MatchSet out = match_set;
  std::map<std::pair<ImageId, ImageId>, std::size_t> pair_of;
  std::vector<std::set<std::pair<int, int>>> existing(out.pairs.size());
  for (std::size_t k = 0; k < out.pairs.size(); ++k) {
    const auto& p = out.pairs[k];
    pair_of[{p.i, p.j}] = k;
    for (const auto& c : p.correspondences) existing[k].insert({c.kp1, c.kp2});
  }
  for (const auto& track : track_set.tracks) {
    if (static_cast<int>(track.size()) > max_track_size) continue;
    // Members are sorted by image, so a < b implies image(a) < image(b).
    for (std::size_t a = 0; a < track.size(); ++a) {
      for (std::size_t b = a + 1; b < track.size(); ++b) {
        const Observation& o1 = track[a];
        const Observation& o2 = track[b];
        auto it = pair_of.find({o1.image, o2.image});
        std::size_t index;
        if (it == pair_of.end()) {
          index = out.pairs.size();
          ImagePairMatches created;
          created.i = o1.image;
          created.j = o2.image;
          created.geometry = GeometryClass::kFundamental;
          created.synthetic_from_tracks = true;
          out.pairs.push_back(std::move(created));
          existing.emplace_back();
          pair_of[{o1.image, o2.image}] = index;
        } else {
          index = it->second;
        }
        if (existing[index].insert({o1.keypoint, o2.keypoint}).second) {
          out.pairs[index].correspondences.push_back(
              {o1.keypoint, o2.keypoint});
        }
      }
    }
  }
  return out;
}

}  // namespace fastmap
