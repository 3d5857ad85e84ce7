#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace bem {

/// Raster frame with interleaved channels (HWC), intensities in [0,1].
struct Frame {
  std::int64_t frame_id = 0;
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<float> pixels;

  static Frame filled(std::int64_t id, int width, int height, int channels, float value);

  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
            static_cast<std::size_t>(x)) * static_cast<std::size_t>(channels) +
           static_cast<std::size_t>(c);
  }
  float at(int x, int y, int c) const { return pixels[index(x, y, c)]; }
  float& at(int x, int y, int c) { return pixels[index(x, y, c)]; }
};

/// Throws invalid_argument unless dims are positive, channels is 1 or 3,
/// the buffer size matches and every value lies in [0,1].
void validate(const Frame& frame);

/// Binary foreground mask: 0 marks detected object pixels, 1 marks background.
struct ForegroundMask {
  std::int64_t frame_id = 0;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> values;

  static ForegroundMask all_background(std::int64_t id, int width, int height);

  std::uint8_t at(int x, int y) const {
    return values[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(x)];
  }
  std::size_t background_count() const noexcept;
};

/// Single-channel |I - B| image.
struct ResidualImage {
  int width = 0;
  int height = 0;
  std::vector<float> values;
};

struct BackgroundEstimate {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<float> pixels;
  /// Number of frames whose mask marked the pixel as background.
  std::vector<std::uint32_t> coverage;
  std::int64_t window_start = 0;
  std::int64_t window_end = 0;
  int window_length = 0;

  /// View as a frame (frame_id = window_end) for embedding or export.
  Frame as_frame() const;
};

}  // namespace bem
