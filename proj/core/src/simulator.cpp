#include "bem/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "bem/error.hpp"
#include "bem/image_io.hpp"
#include "bem/metrics.hpp"
#include "bem/random.hpp"

namespace bem {

namespace {

struct MovingObject {
  double x = 0.0;
  double y = 0.0;
  int w = 0;
  int h = 0;
  double vx = 0.0;
  double vy = 0.0;
  float intensity = 1.0f;
};

// Linear motion with mirror reflection at [0, limit].
void advance(double& pos, double& vel, double limit) {
  pos += vel;
  if (limit <= 0.0) {
    pos = 0.0;
    return;
  }
  for (int guard = 0; guard < 4 && (pos < 0.0 || pos > limit); ++guard) {
    if (pos < 0.0) {
      pos = -pos;
      vel = -vel;
    } else if (pos > limit) {
      pos = 2.0 * limit - pos;
      vel = -vel;
    }
  }
  pos = std::clamp(pos, 0.0, limit);
}

void fill_rect(Frame& f, int x0, int y0, int x1, int y1, float value) {
  x0 = std::clamp(x0, 0, f.width);
  x1 = std::clamp(x1, 0, f.width);
  y0 = std::clamp(y0, 0, f.height);
  y1 = std::clamp(y1, 0, f.height);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x)
      for (int c = 0; c < f.channels; ++c) f.at(x, y, c) = value;
}

Frame render_background(const SceneConfig& cfg, Rng& rng) {
  Frame bg = Frame::filled(0, cfg.width, cfg.height, cfg.channels, 0.0f);
  const double lo = cfg.background_low;
  const double span = cfg.background_high - cfg.background_low;
  if (cfg.background == BackgroundKind::gradient) {
    const double wx = std::max(1, cfg.width - 1);
    const double wy = std::max(1, cfg.height - 1);
    for (int y = 0; y < cfg.height; ++y)
      for (int x = 0; x < cfg.width; ++x)
        for (int c = 0; c < cfg.channels; ++c) {
          const double ramp = 0.5 * x / wx + 0.5 * y / wy;
          // Channels get slightly different slopes so colour frames are not gray.
          const double tilt = c == 0 ? ramp : (c == 1 ? 1.0 - ramp : 0.5 * ramp + 0.25);
          bg.at(x, y, c) = static_cast<float>(lo + span * tilt);
        }
    return bg;
  }
  const int tiles_x = (cfg.width + cfg.tile_size - 1) / cfg.tile_size;
  const int tiles_y = (cfg.height + cfg.tile_size - 1) / cfg.tile_size;
  std::vector<float> tile_values(static_cast<std::size_t>(tiles_x * tiles_y * cfg.channels));
  for (float& v : tile_values) v = static_cast<float>(rng.uniform(lo, cfg.background_high));
  for (int y = 0; y < cfg.height; ++y)
    for (int x = 0; x < cfg.width; ++x) {
      const int tile = (y / cfg.tile_size) * tiles_x + x / cfg.tile_size;
      for (int c = 0; c < cfg.channels; ++c)
        bg.at(x, y, c) = tile_values[static_cast<std::size_t>(tile * cfg.channels + c)];
    }
  return bg;
}

}  // namespace

int CountSchedule::at(int frame_index, int frame_count) const {
  switch (kind) {
    case Kind::constant: return std::max(0, count);
    case Kind::ramp: {
      if (frame_count <= 1) return std::max(0, ramp_from);
      const double t = static_cast<double>(frame_index) / static_cast<double>(frame_count - 1);
      return std::max(0, static_cast<int>(std::lround(ramp_from + (ramp_to - ramp_from) * t)));
    }
    case Kind::sinusoid: {
      const double v = mean + amplitude * std::sin(2.0 * std::numbers::pi * frame_index / period);
      return std::max(0, static_cast<int>(std::lround(v)));
    }
  }
  return 0;
}

bool PeriodicPatch::active(int frame_index) const {
  const int phase_pos = ((frame_index - phase) % period + period) % period;
  return phase_pos < duration;
}

void SceneConfig::validate() const {
  require(width > 0 && height > 0, ErrorKind::invalid_config, "scene dimensions must be positive");
  require(channels == 1 || channels == 3, ErrorKind::invalid_config, "scene channels must be 1 or 3");
  require(frame_count > 0, ErrorKind::invalid_config, "frame_count must be positive");
  require(background_low >= 0.0 && background_low <= background_high && background_high <= 1.0,
          ErrorKind::invalid_config, "background range must satisfy 0 <= low <= high <= 1");
  require(tile_size >= 1, ErrorKind::invalid_config, "tile_size must be >= 1");
  require(noise_sigma >= 0.0, ErrorKind::invalid_config, "noise_sigma must be >= 0");
  require(contrast_margin >= 0.0 && background_high + contrast_margin <= 1.0,
          ErrorKind::invalid_config, "background_high + contrast_margin must not exceed 1");
  require(object_min_size >= 1 && object_min_size <= object_max_size, ErrorKind::invalid_config,
          "object size range is invalid");
  require(object_max_size <= width && object_max_size <= height, ErrorKind::invalid_argument,
          "objects of size " + std::to_string(object_max_size) + " do not fit in a " +
              std::to_string(width) + "x" + std::to_string(height) + " frame");
  require(object_speed >= 0.0, ErrorKind::invalid_config, "object_speed must be >= 0");
  require(schedule.kind != CountSchedule::Kind::sinusoid || schedule.period > 0.0,
          ErrorKind::invalid_config, "sinusoid period must be positive");
  require(schedule.count >= 0 && schedule.ramp_from >= 0 && schedule.ramp_to >= 0,
          ErrorKind::invalid_config, "object counts must be >= 0");
  for (const PeriodicPatch& p : patches) {
    require(p.period >= 1 && p.duration >= 0 && p.duration <= p.period, ErrorKind::invalid_config,
            "patch period/duration are invalid");
    require(p.box.valid() && p.intensity >= 0.0 && p.intensity <= 1.0, ErrorKind::invalid_config,
            "patch box or intensity is invalid");
  }
}

SyntheticStream generate_stream(const SceneConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  SyntheticStream out;
  out.true_background = render_background(cfg, rng);

  const double obj_lo = cfg.background_high + cfg.contrast_margin;
  std::vector<MovingObject> objects;
  out.frames.reserve(static_cast<std::size_t>(cfg.frame_count));
  for (int t = 0; t < cfg.frame_count; ++t) {
    const auto target = static_cast<std::size_t>(cfg.schedule.at(t, cfg.frame_count));
    while (objects.size() < target) {
      MovingObject o;
      o.w = rng.uniform_int(cfg.object_min_size, cfg.object_max_size);
      o.h = rng.uniform_int(cfg.object_min_size, cfg.object_max_size);
      o.x = rng.uniform(0.0, static_cast<double>(cfg.width - o.w));
      o.y = rng.uniform(0.0, static_cast<double>(cfg.height - o.h));
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      o.vx = cfg.object_speed * std::cos(angle);
      o.vy = cfg.object_speed * std::sin(angle);
      o.intensity = static_cast<float>(rng.uniform(obj_lo, 1.0));
      objects.push_back(o);
    }
    while (objects.size() > target) objects.pop_back();

    Frame frame = out.true_background;
    frame.frame_id = t;
    for (const MovingObject& o : objects) {
      const int bx = std::clamp(static_cast<int>(std::lround(o.x)), 0, cfg.width - o.w);
      const int by = std::clamp(static_cast<int>(std::lround(o.y)), 0, cfg.height - o.h);
      fill_rect(frame, bx, by, bx + o.w, by + o.h, o.intensity);
      out.ground_truth.push_back({t, Box{static_cast<double>(bx), static_cast<double>(by),
                                         static_cast<double>(bx + o.w), static_cast<double>(by + o.h)},
                                  0});
    }
    for (const PeriodicPatch& p : cfg.patches) {
      if (!p.active(t)) continue;
      fill_rect(frame, static_cast<int>(std::floor(p.box.x1)), static_cast<int>(std::floor(p.box.y1)),
                static_cast<int>(std::ceil(p.box.x2)), static_cast<int>(std::ceil(p.box.y2)),
                static_cast<float>(p.intensity));
    }
    for (float& v : frame.pixels) {
      const double noisy = cfg.noise_sigma > 0.0 ? v + rng.normal(0.0, cfg.noise_sigma) : v;
      v = quantize_u8(static_cast<float>(noisy));
    }
    out.frames.push_back(std::move(frame));
    out.object_counts.push_back(static_cast<int>(objects.size()));

    for (MovingObject& o : objects) {
      advance(o.x, o.vx, static_cast<double>(cfg.width - o.w));
      advance(o.y, o.vy, static_cast<double>(cfg.height - o.h));
    }
  }
  return out;
}

void SynthDetectorConfig::validate() const {
  require(tp_recall >= 0.0 && tp_recall <= 1.0, ErrorKind::invalid_config, "tp_recall must lie in [0,1]");
  require(tp_score.a > 0.0 && tp_score.b > 0.0 && fp_score.a > 0.0 && fp_score.b > 0.0,
          ErrorKind::invalid_config, "beta parameters must be positive");
  require(fp_rate_per_frame >= 0.0 && fp_rate_per_object >= 0.0, ErrorKind::invalid_config,
          "false-positive rates must be >= 0");
  require(fp_density_exponent >= 0.0 && fp_density_exponent <= 4.0, ErrorKind::invalid_config,
          "fp_density_exponent must lie in [0,4]");
  require(box_jitter_sigma >= 0.0, ErrorKind::invalid_config, "box_jitter_sigma must be >= 0");
  require(fp_min_size >= 1 && fp_min_size <= fp_max_size, ErrorKind::invalid_config,
          "false-positive size range is invalid");
}

std::vector<Detection> synth_detect(const std::vector<Frame>& frames,
                                    const std::vector<GroundTruthBox>& gts,
                                    const SynthDetectorConfig& cfg) {
  cfg.validate();
  std::map<std::int64_t, std::vector<const GroundTruthBox*>> by_frame;
  for (const GroundTruthBox& g : gts) by_frame[g.frame_id].push_back(&g);

  Rng rng(cfg.seed);
  std::vector<Detection> out;
  for (const Frame& frame : frames) {
    const double W = frame.width;
    const double H = frame.height;
    const auto it = by_frame.find(frame.frame_id);
    const std::vector<const GroundTruthBox*> empty;
    const auto& frame_gts = it == by_frame.end() ? empty : it->second;

    for (const GroundTruthBox* g : frame_gts) {
      if (!(rng.uniform() < cfg.tp_recall)) continue;
      const double s = cfg.box_jitter_sigma;
      Box b{g->box.x1 + rng.normal(0.0, s), g->box.y1 + rng.normal(0.0, s),
            g->box.x2 + rng.normal(0.0, s), g->box.y2 + rng.normal(0.0, s)};
      b.x1 = std::clamp(b.x1, 0.0, W - 1.0);
      b.y1 = std::clamp(b.y1, 0.0, H - 1.0);
      b.x2 = std::clamp(b.x2, b.x1 + 1.0, W);
      b.y2 = std::clamp(b.y2, b.y1 + 1.0, H);
      out.push_back({frame.frame_id, b, rng.beta(cfg.tp_score.a, cfg.tp_score.b), 0});
    }

    const double n = static_cast<double>(frame_gts.size());
    const double mean =
        cfg.fp_rate_per_frame + (n > 0.0 ? cfg.fp_rate_per_object * std::pow(n, cfg.fp_density_exponent) : 0.0);
    const int n_fp = rng.poisson(mean);
    for (int k = 0; k < n_fp; ++k) {
      const int w = std::min(rng.uniform_int(cfg.fp_min_size, cfg.fp_max_size), frame.width);
      const int h = std::min(rng.uniform_int(cfg.fp_min_size, cfg.fp_max_size), frame.height);
      Box b;
      const int attempts = cfg.fp_placement == FpPlacement::background_only ? 32 : 1;
      for (int a = 0; a < attempts; ++a) {
        const double x = rng.uniform(0.0, W - w);
        const double y = rng.uniform(0.0, H - h);
        b = Box{x, y, x + w, y + h};
        const bool clear = std::none_of(frame_gts.begin(), frame_gts.end(),
                                        [&](const GroundTruthBox* g) { return iou(b, g->box) > 0.0; });
        if (clear) break;
      }
      out.push_back({frame.frame_id, b, rng.beta(cfg.fp_score.a, cfg.fp_score.b), 0});
    }
  }
  return out;
}

std::string to_string(BackgroundKind kind) {
  return kind == BackgroundKind::tiled_noise ? "tiled-noise" : "gradient";
}

std::string to_string(FpPlacement placement) {
  return placement == FpPlacement::uniform ? "uniform" : "background-only";
}

}  // namespace bem
