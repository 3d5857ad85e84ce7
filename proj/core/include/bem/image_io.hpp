#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bem/image.hpp"

namespace bem {

/// Reads binary PGM (P5) or PPM (P6) with maxval 255.
Frame read_pnm(const std::filesystem::path& path, std::int64_t frame_id = 0);

/// Writes P6 for 3-channel frames and P5 for single-channel frames.
/// Values are rounded to the nearest of 256 levels.
void write_pnm(const std::filesystem::path& path, const Frame& frame);

/// `frame_000042.ppm` (or `.pgm` for single-channel frames).
std::string frame_filename(std::int64_t frame_id, int channels);

/// Loads every `frame_%06d.ppm|pgm` in `dir` sorted by id. Fails with a data
/// error naming the first missing id when ids are not consecutive.
std::vector<Frame> read_frame_directory(const std::filesystem::path& dir);

void write_frame_directory(const std::filesystem::path& dir, const std::vector<Frame>& frames);

/// Rounds to the 8-bit grid used by the file format (k/255).
float quantize_u8(float v) noexcept;

}  // namespace bem
