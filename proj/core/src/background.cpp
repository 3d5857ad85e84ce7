#include "bem/background.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bem/error.hpp"
#include "bem/parallel.hpp"

namespace bem {

void QualityConfig::validate() const {
  require(ghost_threshold > 0.0 && ghost_threshold < 1.0, ErrorKind::invalid_config,
          "ghost_threshold must lie in (0,1)");
  require(mae_weight >= 0.0 && ghost_weight >= 0.0, ErrorKind::invalid_config,
          "quality weights must be non-negative");
}

void WindowConfig::validate() const {
  require(window_size >= 1, ErrorKind::invalid_config, "window size must be >= 1");
  require(!candidate_sizes.empty(), ErrorKind::invalid_config, "candidate window sizes are empty");
  require(std::all_of(candidate_sizes.begin(), candidate_sizes.end(), [](int l) { return l >= 1; }),
          ErrorKind::invalid_config, "candidate window sizes must be >= 1");
}

ForegroundMask mask_from_detections(int width, int height, std::span<const Detection> detections,
                                    int dilation, std::int64_t frame_id) {
  require(width > 0 && height > 0, ErrorKind::invalid_argument, "mask dimensions must be positive");
  require(dilation >= 0, ErrorKind::invalid_argument, "mask dilation must be >= 0");
  ForegroundMask mask = ForegroundMask::all_background(frame_id, width, height);
  for (const Detection& det : detections) {
    const Box& b = det.box;
    if (!(std::isfinite(b.x1) && std::isfinite(b.y1) && std::isfinite(b.x2) && std::isfinite(b.y2)))
      fail(ErrorKind::invalid_argument, "detection box has non-finite coordinates");
    // Pixel x covers [x, x+1); it is foreground when that span meets (x1-d, x2+d).
    const double x_lo = std::floor(b.x1 - dilation);
    const double x_hi = std::ceil(b.x2 + dilation);
    const double y_lo = std::floor(b.y1 - dilation);
    const double y_hi = std::ceil(b.y2 + dilation);
    const int x0 = static_cast<int>(std::clamp(x_lo, 0.0, static_cast<double>(width)));
    const int x1 = static_cast<int>(std::clamp(x_hi, 0.0, static_cast<double>(width)));
    const int y0 = static_cast<int>(std::clamp(y_lo, 0.0, static_cast<double>(height)));
    const int y1 = static_cast<int>(std::clamp(y_hi, 0.0, static_cast<double>(height)));
    for (int y = y0; y < y1; ++y) {
      auto row = mask.values.begin() + static_cast<std::ptrdiff_t>(y) * width;
      std::fill(row + x0, row + x1, std::uint8_t{0});
    }
  }
  return mask;
}

BackgroundEstimate masked_temporal_average(std::span<const Frame> frames,
                                           std::span<const ForegroundMask> masks) {
  require(!frames.empty(), ErrorKind::invalid_argument, "background window is empty");
  require(frames.size() == masks.size(), ErrorKind::invalid_argument,
          "frame and mask counts differ (" + std::to_string(frames.size()) + " vs " +
              std::to_string(masks.size()) + ")");
  const Frame& first = frames.front();
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const Frame& f = frames[t];
    const ForegroundMask& m = masks[t];
    require(f.width == first.width && f.height == first.height && f.channels == first.channels,
            ErrorKind::invalid_argument,
            "frame " + std::to_string(f.frame_id) + " dimensions differ from the window");
    require(m.width == f.width && m.height == f.height &&
                m.values.size() == f.pixel_count(),
            ErrorKind::invalid_argument,
            "mask dimensions differ from frame " + std::to_string(f.frame_id));
    require(f.pixels.size() == f.pixel_count() * static_cast<std::size_t>(f.channels),
            ErrorKind::invalid_argument, "frame buffer size does not match dimensions");
  }

  const std::size_t npix = first.pixel_count();
  const std::size_t nch = static_cast<std::size_t>(first.channels);
  std::vector<double> masked_sum(npix * nch, 0.0);
  std::vector<double> plain_sum(npix * nch, 0.0);
  std::vector<std::uint32_t> coverage(npix, 0);

  // Frame-outer order: per pixel the sums still accumulate t = 0, 1, ..., L-1.
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const std::vector<float>& px = frames[t].pixels;
    const std::vector<std::uint8_t>& mv = masks[t].values;
    for (std::size_t p = 0; p < npix; ++p) {
      const bool background = mv[p] != 0;
      coverage[p] += background ? 1u : 0u;
      for (std::size_t c = 0; c < nch; ++c) {
        const double v = static_cast<double>(px[p * nch + c]);
        plain_sum[p * nch + c] += v;
        if (background) masked_sum[p * nch + c] += v;
      }
    }
  }

  BackgroundEstimate bg;
  bg.width = first.width;
  bg.height = first.height;
  bg.channels = first.channels;
  bg.window_start = first.frame_id;
  bg.window_end = frames.back().frame_id;
  bg.window_length = static_cast<int>(frames.size());
  bg.pixels.resize(npix * nch);
  const double count = static_cast<double>(frames.size());
  for (std::size_t p = 0; p < npix; ++p) {
    for (std::size_t c = 0; c < nch; ++c) {
      const std::size_t i = p * nch + c;
      const double v = coverage[p] > 0 ? masked_sum[i] / static_cast<double>(coverage[p])
                                       : plain_sum[i] / count;
      bg.pixels[i] = static_cast<float>(v);
    }
  }
  bg.coverage = std::move(coverage);
  return bg;
}

ResidualImage residual(const Frame& frame, const BackgroundEstimate& background) {
  require(frame.width == background.width && frame.height == background.height &&
              frame.channels == background.channels,
          ErrorKind::invalid_argument,
          "residual: frame " + std::to_string(frame.frame_id) + " does not match background dims");
  ResidualImage r;
  r.width = frame.width;
  r.height = frame.height;
  const std::size_t npix = frame.pixel_count();
  const std::size_t nch = static_cast<std::size_t>(frame.channels);
  r.values.resize(npix);
  for (std::size_t p = 0; p < npix; ++p) {
    double i_sum = 0.0;
    double b_sum = 0.0;
    for (std::size_t c = 0; c < nch; ++c) {
      i_sum += static_cast<double>(frame.pixels[p * nch + c]);
      b_sum += static_cast<double>(background.pixels[p * nch + c]);
    }
    const double n = static_cast<double>(nch);
    r.values[p] = static_cast<float>(std::abs(i_sum / n - b_sum / n));
  }
  return r;
}

QualityScore background_quality(const ResidualImage& residual, const ForegroundMask& bg_mask,
                                 const QualityConfig& cfg) {
  cfg.validate();
  require(residual.width == bg_mask.width && residual.height == bg_mask.height &&
              residual.values.size() == bg_mask.values.size(),
          ErrorKind::invalid_argument, "residual and mask dimensions differ");
  double sum = 0.0;
  std::size_t ghosts = 0;
  std::size_t n_bg = 0;
  for (std::size_t p = 0; p < residual.values.size(); ++p) {
    if (bg_mask.values[p] == 0) continue;
    const double r = static_cast<double>(residual.values[p]);
    sum += r;
    ghosts += r > cfg.ghost_threshold ? 1 : 0;
    ++n_bg;
  }
  require(n_bg > 0, ErrorKind::empty_background,
          "frame " + std::to_string(bg_mask.frame_id) + " has no background pixels");
  QualityScore q;
  q.mae = sum / static_cast<double>(n_bg);
  q.ghost_rate = static_cast<double>(ghosts) / static_cast<double>(n_bg);
  q.combined = cfg.mae_weight * q.mae + cfg.ghost_weight * q.ghost_rate;
  return q;
}

namespace {

struct WindowTotals {
  double mae = 0.0;
  double ghost = 0.0;
  double combined = 0.0;
  std::size_t windows = 0;
};

WindowTotals score_window_size(std::span<const FrameSequence> sequences, int window,
                               const QualityConfig& qcfg) {
  WindowTotals totals;
  const std::size_t L = static_cast<std::size_t>(window);
  for (const FrameSequence& seq : sequences) {
    const std::size_t n = seq.frames.size();
    for (std::size_t start = 0; start + L < n; start += L) {
      const std::size_t eval_begin = start + L;
      const std::size_t eval_end = std::min(n, eval_begin + L);
      const BackgroundEstimate bg =
          masked_temporal_average(std::span(seq.frames).subspan(start, L),
                                  std::span(seq.masks).subspan(start, L));
      double mae = 0.0;
      double ghost = 0.0;
      double combined = 0.0;
      std::size_t scored = 0;
      for (std::size_t t = eval_begin; t < eval_end; ++t) {
        // Frames with no background pixels carry no evidence about B.
        if (seq.masks[t].background_count() == 0) continue;
        const QualityScore q = background_quality(residual(seq.frames[t], bg), seq.masks[t], qcfg);
        mae += q.mae;
        ghost += q.ghost_rate;
        combined += q.combined;
        ++scored;
      }
      if (scored == 0) continue;
      const double k = static_cast<double>(scored);
      totals.mae += mae / k;
      totals.ghost += ghost / k;
      totals.combined += combined / k;
      ++totals.windows;
    }
  }
  return totals;
}

}  // namespace

WindowSweepResult sweep_window_size(std::span<const FrameSequence> sequences,
                                    const WindowConfig& wcfg, const QualityConfig& qcfg) {
  wcfg.validate();
  qcfg.validate();
  require(!sequences.empty(), ErrorKind::invalid_argument, "window sweep needs at least one sequence");
  const int max_l = *std::max_element(wcfg.candidate_sizes.begin(), wcfg.candidate_sizes.end());
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    const FrameSequence& seq = sequences[s];
    require(seq.frames.size() == seq.masks.size(), ErrorKind::invalid_argument,
            "sequence " + std::to_string(s) + " has mismatched frame and mask counts");
    const std::size_t needed = static_cast<std::size_t>(max_l) + 1;
    require(seq.frames.size() >= needed, ErrorKind::invalid_argument,
            "sequence " + std::to_string(s) + " has " + std::to_string(seq.frames.size()) +
                " frames; window size " + std::to_string(max_l) + " needs " +
                std::to_string(needed) + " (short by " +
                std::to_string(needed - seq.frames.size()) + ")");
  }

  const std::size_t n_cand = wcfg.candidate_sizes.size();
  std::vector<WindowTotals> totals(n_cand);
  parallel_for(n_cand, [&](std::size_t i) {
    totals[i] = score_window_size(sequences, wcfg.candidate_sizes[i], qcfg);
  });

  WindowSweepResult result;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n_cand; ++i) {
    WindowSweepEntry e;
    e.window_size = wcfg.candidate_sizes[i];
    e.windows = totals[i].windows;
    require(e.windows > 0, ErrorKind::invalid_argument,
            "window size " + std::to_string(e.window_size) + " produced no scorable window");
    const double k = static_cast<double>(e.windows);
    e.mean_mae = totals[i].mae / k;
    e.mean_ghost_rate = totals[i].ghost / k;
    e.mean_combined = totals[i].combined / k;
    if (e.mean_combined < best ||
        (e.mean_combined == best && e.window_size < result.best_window_size)) {
      best = e.mean_combined;
      result.best_window_size = e.window_size;
    }
    result.per_size.push_back(e);
  }
  return result;
}

}  // namespace bem
