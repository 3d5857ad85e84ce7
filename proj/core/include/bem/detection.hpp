#pragma once

#include <cstdint>
#include <optional>

namespace bem {

/// Axis-aligned box in pixel coordinates, x1 < x2 and y1 < y2.
struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const noexcept { return x2 - x1; }
  double height() const noexcept { return y2 - y1; }
  double area() const noexcept { return width() > 0.0 && height() > 0.0 ? width() * height() : 0.0; }
  bool valid() const noexcept { return x1 < x2 && y1 < y2; }

  friend bool operator==(const Box&, const Box&) = default;
};

struct Detection {
  std::int64_t frame_id = 0;
  Box box;
  double score = 0.0;
  std::optional<int> label;
};

struct GroundTruthBox {
  std::int64_t frame_id = 0;
  Box box;
  int label = 0;
};

}  // namespace bem
