#pragma once

#include <span>
#include <vector>

#include "bem/detection.hpp"
#include "bem/image.hpp"

namespace bem {

struct QualityConfig {
  /// Residual above which a background pixel counts as a ghost.
  double ghost_threshold = 30.0 / 255.0;
  double mae_weight = 1.0;
  double ghost_weight = 1.0;

  void validate() const;
};

struct WindowConfig {
  int window_size = 25;
  std::vector<int> candidate_sizes{5, 10, 15, 20, 25, 30};

  void validate() const;
};

struct QualityScore {
  double mae = 0.0;
  double ghost_rate = 0.0;
  double combined = 0.0;
};

/// Rasterizes detection boxes (grown by `dilation` pixels on every side) into
/// a mask. A pixel [x,x+1)x[y,y+1) is foreground when it overlaps the grown box.
ForegroundMask mask_from_detections(int width, int height, std::span<const Detection> detections,
                                    int dilation, std::int64_t frame_id = 0);

/// Masked temporal mean B(p) = sum_t I_t(p) M_t(p) / sum_t M_t(p), accumulated
/// in double in frame order. Pixels never marked background fall back to the
/// unmasked mean and keep coverage 0.
BackgroundEstimate masked_temporal_average(std::span<const Frame> frames,
                                           std::span<const ForegroundMask> masks);

/// R(p) = |mean_c I(p,c) - mean_c B(p,c)|.
ResidualImage residual(const Frame& frame, const BackgroundEstimate& background);

/// MAE and ghost rate over the pixels where `bg_mask` is 1. Throws
/// empty_background when there are none.
QualityScore background_quality(const ResidualImage& residual, const ForegroundMask& bg_mask,
                                 const QualityConfig& cfg);

/// One fixed-camera sequence with its per-frame masks.
struct FrameSequence {
  std::vector<Frame> frames;
  std::vector<ForegroundMask> masks;
};

struct WindowSweepEntry {
  int window_size = 0;
  double mean_mae = 0.0;
  double mean_ghost_rate = 0.0;
  double mean_combined = 0.0;
  std::size_t windows = 0;
};

struct WindowSweepResult {
  int best_window_size = 0;
  std::vector<WindowSweepEntry> per_size;  // in candidate order
};

/// For every candidate L, split each sequence into non-overlapping windows of
/// L frames. The background of window w is scored against the frames of the
/// following L-frame span (possibly partial), each with its own mask. Window
/// scores are averaged over all windows of all sequences; the smallest L with
/// the lowest mean combined score wins. Every sequence needs at least
/// max(L)+1 frames.
WindowSweepResult sweep_window_size(std::span<const FrameSequence> sequences,
                                    const WindowConfig& wcfg, const QualityConfig& qcfg);

}  // namespace bem
