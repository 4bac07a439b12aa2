#pragma once

#include "fastmap/model.h"

namespace fastmap {

// Connected components of the keypoint match graph. Components holding two
// keypoints of the same image are dropped, as are singletons.
TrackSet BuildTracks(const MatchSet& match_set);

// Adds every pairwise cross-image match implied by each track of at most
// `max_track_size` members. Existing correspondences are kept in place;
// image pairs without a record are created and flagged as synthetic.
MatchSet CompleteMatches(const TrackSet& track_set, const MatchSet& match_set,
                         int max_track_size = 200);

}  // namespace fastmap
