#include "bem/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bem/error.hpp"

namespace bem {

Frame Frame::filled(std::int64_t id, int width, int height, int channels, float value) {
  Frame f;
  f.frame_id = id;
  f.width = width;
  f.height = height;
  f.channels = channels;
  f.pixels.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
                      static_cast<std::size_t>(channels),
                  value);
  return f;
}

void validate(const Frame& frame) {
  require(frame.width > 0 && frame.height > 0, ErrorKind::invalid_argument,
          "frame " + std::to_string(frame.frame_id) + " has non-positive dimensions");
  require(frame.channels == 1 || frame.channels == 3, ErrorKind::invalid_argument,
          "frame " + std::to_string(frame.frame_id) + " must have 1 or 3 channels");
  require(frame.pixels.size() == frame.pixel_count() * static_cast<std::size_t>(frame.channels),
          ErrorKind::invalid_argument,
          "frame " + std::to_string(frame.frame_id) + " buffer size does not match dimensions");
  const bool in_range = std::all_of(frame.pixels.begin(), frame.pixels.end(),
                                    [](float v) { return v >= 0.0f && v <= 1.0f; });
  require(in_range, ErrorKind::invalid_argument,
          "frame " + std::to_string(frame.frame_id) + " has intensities outside [0,1]");
}

ForegroundMask ForegroundMask::all_background(std::int64_t id, int width, int height) {
  ForegroundMask m;
  m.frame_id = id;
  m.width = width;
  m.height = height;
  m.values.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 1);
  return m;
}

std::size_t ForegroundMask::background_count() const noexcept {
  return static_cast<std::size_t>(std::count(values.begin(), values.end(), std::uint8_t{1}));
}

Frame BackgroundEstimate::as_frame() const {
  Frame f;
  f.frame_id = window_end;
  f.width = width;
  f.height = height;
  f.channels = channels;
  f.pixels = pixels;
  return f;
}

}  // namespace bem
