#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fastmap/config.h"
#include "fastmap/error.h"
#include "fastmap/model.h"

namespace fastmap {

struct StageRecord {
  std::string name;
  double seconds = 0.0;
  std::vector<std::pair<std::string, std::string>> values;
};

// Failure inside a named stage, e.g. "rotation.filter_pairs". Carries the
// records of the stages that finished before it.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message,
             std::vector<StageRecord> completed = {})
      : Error(stage + ": " + message),
        stage_(std::move(stage)),
        completed_(std::move(completed)) {}
  const std::string& stage() const { return stage_; }
  const std::vector<StageRecord>& completed() const { return completed_; }

 private:
  std::string stage_;
  std::vector<StageRecord> completed_;
};

struct PipelineResult {
  SceneModel model;
  std::vector<StageRecord> stages;
  int num_tracks = 0;
  double epipolar_seconds_per_step = 0.0;
};

// Runs every stage in order on a validated match set.
PipelineResult RunPipeline(const MatchSet& match_set,
                           const PipelineConfig& config, std::uint64_t seed);

// One line per stage: `<stage> seconds=<t> key=value ...`.
std::string FormatReport(const std::vector<StageRecord>& stages);

}  // namespace fastmap
