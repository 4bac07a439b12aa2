#include "fastmap/config.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>
#include <variant>
#include <vector>

#include "fastmap/error.h"

namespace fastmap {
namespace {

using Field = std::variant<int PipelineConfig::*, double PipelineConfig::*,
                           bool PipelineConfig::*>;

struct Entry {
  const char* key;
  Field field;
};

const std::vector<Entry>& Registry() {
  using C = PipelineConfig;
  static const std::vector<Entry> entries = {
      {"distortion_levels", &C::distortion_levels},
      {"distortion_samples_per_level", &C::distortion_samples_per_level},
      {"distortion_min", &C::distortion_min},
      {"distortion_max", &C::distortion_max},
      {"estimate_distortion", &C::estimate_distortion},
      {"fov_min_deg", &C::fov_min_deg},
      {"fov_max_deg", &C::fov_max_deg},
      {"focal_samples", &C::focal_samples},
      {"tau", &C::tau},
      {"fallback_fov_deg", &C::fallback_fov_deg},
      {"rotation_lr", &C::rotation_lr},
      {"rotation_steps", &C::rotation_steps},
      {"pair_inlier_threshold_start", &C::pair_inlier_threshold_start},
      {"pair_inlier_threshold_min", &C::pair_inlier_threshold_min},
      {"translation_lr", &C::translation_lr},
      {"translation_steps", &C::translation_steps},
      {"translation_inits", &C::translation_inits},
      {"sphere_samples", &C::sphere_samples},
      {"sphere_refine_levels", &C::sphere_refine_levels},
      {"sphere_refine_grid", &C::sphere_refine_grid},
      {"max_completion_track_size", &C::max_completion_track_size},
      {"track_filter_threshold", &C::track_filter_threshold},
      {"track_filter_median_factor", &C::track_filter_median_factor},
      {"epipolar_adjustment", &C::epipolar_adjustment},
      {"epipolar_lr", &C::epipolar_lr},
      {"lr_decay", &C::lr_decay},
      {"prune_rounds", &C::prune_rounds},
      {"prune_threshold_start", &C::prune_threshold_start},
      {"prune_threshold_end", &C::prune_threshold_end},
      {"irls_iters_between_prunes", &C::irls_iters_between_prunes},
      {"epipolar_steps_per_iter", &C::epipolar_steps_per_iter},
      {"focal_refine", &C::focal_refine},
      {"irls_residual_floor", &C::irls_residual_floor},
      {"adam_beta1", &C::adam_beta1},
      {"adam_beta2", &C::adam_beta2},
      {"adam_eps", &C::adam_eps},
      {"triangulation_min_track_inliers", &C::triangulation_min_track_inliers},
      {"triangulation_min_angle_deg", &C::triangulation_min_angle_deg},
      {"reproj_outlier_px", &C::reproj_outlier_px},
      {"triangulation_max_pairs", &C::triangulation_max_pairs},
  };
  return entries;
}

std::string_view Trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

template <typename T>
T ParseNumber(std::string_view text, const std::string& key) {
  T value{};
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error("config: cannot parse value of '" + key + "'");
  }
  return value;
}

bool ParseBool(std::string_view text, const std::string& key) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw Error("config: '" + key + "' expects true/false");
}

void Require(bool condition, const char* what) {
  if (!condition) throw Error(std::string("config: out of range: ") + what);
}

}  // namespace

void CheckConfig(const PipelineConfig& c) {
  Require(c.distortion_levels >= 1, "distortion_levels >= 1");
  Require(c.distortion_samples_per_level >= 2,
          "distortion_samples_per_level >= 2");
  Require(c.distortion_min < c.distortion_max, "distortion interval");
  Require(c.fov_min_deg > 0.0 && c.fov_min_deg < c.fov_max_deg &&
              c.fov_max_deg < 180.0,
          "fov interval");
  Require(c.focal_samples >= 1, "focal_samples >= 1");
  Require(c.tau > 0.0, "tau > 0");
  Require(c.fallback_fov_deg > 0.0 && c.fallback_fov_deg < 180.0,
          "fallback_fov_deg");
  Require(c.rotation_lr > 0.0, "rotation_lr > 0");
  Require(c.rotation_steps >= 1, "rotation_steps >= 1");
  Require(c.pair_inlier_threshold_min >= 1 &&
              c.pair_inlier_threshold_start >= c.pair_inlier_threshold_min,
          "pair inlier thresholds");
  Require(c.translation_lr > 0.0, "translation_lr > 0");
  Require(c.translation_steps >= 1, "translation_steps >= 1");
  Require(c.translation_inits >= 1, "translation_inits >= 1");
  Require(c.sphere_samples >= 1, "sphere_samples >= 1");
  Require(c.sphere_refine_levels >= 0, "sphere_refine_levels >= 0");
  Require(c.sphere_refine_grid >= 2, "sphere_refine_grid >= 2");
  Require(c.max_completion_track_size >= 2, "max_completion_track_size");
  Require(c.track_filter_threshold > 0.0, "track_filter_threshold > 0");
  Require(c.track_filter_median_factor > 0.0,
          "track_filter_median_factor > 0");
  Require(c.epipolar_lr > 0.0, "epipolar_lr > 0");
  Require(c.lr_decay >= 1.0, "lr_decay >= 1");
  Require(c.prune_rounds >= 1, "prune_rounds >= 1");
  Require(c.prune_threshold_end > 0.0 &&
              c.prune_threshold_start >= c.prune_threshold_end,
          "prune thresholds");
  Require(c.irls_iters_between_prunes >= 1, "irls_iters_between_prunes");
  Require(c.epipolar_steps_per_iter >= 1, "epipolar_steps_per_iter");
  Require(c.irls_residual_floor > 0.0, "irls_residual_floor > 0");
  Require(c.adam_beta1 >= 0.0 && c.adam_beta1 < 1.0, "adam_beta1");
  Require(c.adam_beta2 >= 0.0 && c.adam_beta2 < 1.0, "adam_beta2");
  Require(c.adam_eps > 0.0, "adam_eps > 0");
  Require(c.triangulation_min_track_inliers >= 2,
          "triangulation_min_track_inliers >= 2");
  Require(c.triangulation_min_angle_deg >= 0.0, "triangulation_min_angle");
  Require(c.reproj_outlier_px > 0.0, "reproj_outlier_px > 0");
  Require(c.triangulation_max_pairs >= 1, "triangulation_max_pairs >= 1");
}

PipelineConfig ParseConfig(const std::string& text) {
  PipelineConfig config;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error("config: line " + std::to_string(line_no) +
                  ": expected 'key = value'");
    }
    const std::string key(Trim(line.substr(0, eq)));
    const std::string_view value = Trim(line.substr(eq + 1));
    const Entry* entry = nullptr;
    for (const Entry& e : Registry()) {
      if (key == e.key) entry = &e;
    }
    if (entry == nullptr) throw Error("config: unknown key '" + key + "'");
    std::visit(
        [&](auto member) {
          using T = std::remove_cvref_t<decltype(config.*member)>;
          if constexpr (std::is_same_v<T, bool>) {
            config.*member = ParseBool(value, key);
          } else {
            config.*member = ParseNumber<T>(value, key);
          }
        },
        entry->field);
  }
  CheckConfig(config);
  return config;
}

PipelineConfig LoadConfig(const std::string& path) {
  if (path.empty()) return PipelineConfig{};
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return ParseConfig(text.str());
}

std::string SerializeConfig(const PipelineConfig& config) {
  std::ostringstream out;
  for (const Entry& e : Registry()) {
    out << e.key << " = ";
    std::visit(
        [&](auto member) {
          using T = std::remove_cvref_t<decltype(config.*member)>;
          if constexpr (std::is_same_v<T, bool>) {
            out << (config.*member ? "true" : "false");
          } else if constexpr (std::is_same_v<T, double>) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.17g", config.*member);
            out << buf;
          } else {
            out << config.*member;
          }
        },
        e.field);
    out << '\n';
  }
  return out.str();
}

}  // namespace fastmap
