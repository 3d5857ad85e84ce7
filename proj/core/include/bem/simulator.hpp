#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bem/detection.hpp"
#include "bem/image.hpp"

namespace bem {

enum class BackgroundKind { gradient, tiled_noise };

struct CountSchedule {
  enum class Kind { constant, ramp, sinusoid };
  Kind kind = Kind::constant;
  int count = 5;                 ///< constant
  int ramp_from = 0;             ///< ramp: linear from..to across the stream
  int ramp_to = 20;
  double mean = 5.0;             ///< sinusoid: round(mean + amplitude sin(2 pi t / period))
  double amplitude = 3.0;
  double period = 50.0;

  int at(int frame_index, int frame_count) const;
};

/// A static, unannotated patch that appears for `duration` frames out of
/// every `period` (starting at `phase`). Models recurring scene events that a
/// detector does not report, which leak into masked background averages.
struct PeriodicPatch {
  Box box;
  double intensity = 1.0;
  int period = 20;
  int phase = 0;
  int duration = 1;

  bool active(int frame_index) const;
};

struct SceneConfig {
  std::uint64_t seed = 1;
  int width = 128;
  int height = 96;
  int channels = 1;
  int frame_count = 200;
  BackgroundKind background = BackgroundKind::gradient;
  double background_low = 0.2;
  double background_high = 0.5;
  int tile_size = 16;
  CountSchedule schedule;
  int object_min_size = 6;
  int object_max_size = 14;
  double object_speed = 1.5;
  double noise_sigma = 0.01;
  /// Object intensities are drawn from [background_high + margin, 1].
  double contrast_margin = 0.2;
  std::vector<PeriodicPatch> patches;

  void validate() const;
};

struct SyntheticStream {
  std::vector<Frame> frames;
  std::vector<GroundTruthBox> ground_truth;
  Frame true_background;
  std::vector<int> object_counts;  ///< per frame
};

/// Renders background + moving rectangles (+ periodic patches) + clipped
/// Gaussian noise, quantized to 8 bits. Frame ids start at 0. Draw order per
/// frame: spawn draws for new objects, then per-pixel noise in row-major,
/// channel-minor order. Background tiles are drawn once up front.
SyntheticStream generate_stream(const SceneConfig& cfg);

enum class FpPlacement { background_only, uniform };

struct BetaParams {
  double a = 2.0;
  double b = 2.0;
};

struct SynthDetectorConfig {
  std::uint64_t seed = 7;
  double tp_recall = 0.9;
  BetaParams tp_score{6.0, 2.0};
  BetaParams fp_score{2.0, 4.0};
  double fp_rate_per_frame = 1.0;
  /// Poisson mean is fp_rate_per_frame + fp_rate_per_object * n^fp_density_exponent
  /// for n ground-truth objects in the frame; an exponent above 1 models
  /// clutter-driven confusions that outgrow the object count.
  double fp_rate_per_object = 0.0;
  double fp_density_exponent = 1.0;
  FpPlacement fp_placement = FpPlacement::background_only;
  double box_jitter_sigma = 1.0;
  int fp_min_size = 6;
  int fp_max_size = 14;

  void validate() const;
};

/// Per frame in order: for each GT box one uniform (emit?), then if emitted
/// four jitter normals and one beta score; then one Poisson count, then per
/// false positive a size pair, placement draws and one beta score.
std::vector<Detection> synth_detect(const std::vector<Frame>& frames,
                                    const std::vector<GroundTruthBox>& gts,
                                    const SynthDetectorConfig& cfg);

std::string to_string(BackgroundKind kind);
std::string to_string(FpPlacement placement);

}  // namespace bem
