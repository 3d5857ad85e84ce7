#pragma once

#include <cstddef>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bem/image.hpp"

namespace bem {

/// Unit-norm feature vector. Only constructible through `normalized`, so every
/// instance satisfies | ||v|| - 1 | <= 1e-6.
class Embedding {
 public:
  /// L2-normalizes `raw`. Throws invalid_argument on non-finite entries and
  /// degenerate_feature when the norm is zero.
  static Embedding normalized(std::span<const double> raw);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  Embedding() = default;
  std::vector<double> values_;
};

/// Raw feature map: `positions` spatial locations with `dim` features each,
/// stored position-major.
struct FeatureMap {
  std::size_t dim = 0;
  std::size_t positions = 0;
  std::vector<double> values;
};

class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::string name() const = 0;
  virtual std::size_t dim() const = 0;
  /// Must be deterministic: identical images produce identical maps.
  virtual FeatureMap features(const Frame& image) const = 0;
};

/// Splits the image into a grid x grid lattice of cells and records the
/// per-channel mean and population standard deviation of every cell. The map
/// has a single position, so pooling is the identity.
/// Layout: cell-major (row-major cells), then channel, then {mean, std}.
class GridStatsExtractor final : public FeatureExtractor {
 public:
  explicit GridStatsExtractor(int grid = 8, int channels = 3);

  std::string name() const override;
  std::size_t dim() const override;
  FeatureMap features(const Frame& image) const override;

  int grid() const noexcept { return grid_; }
  int channels() const noexcept { return channels_; }

 private:
  int grid_;
  int channels_;
};

/// Global average pool over positions followed by L2 normalization.
Embedding pool_and_normalize(const FeatureMap& map);

Embedding extract_embedding(const Frame& image, const FeatureExtractor& extractor);

/// Dot product clamped to [-1, 1]. Throws invalid_argument on dim mismatch.
double cosine_similarity(const Embedding& a, const Embedding& b);

/// Ring of the most recent background embeddings; the prototype is the
/// renormalized arithmetic mean of the ring.
class PrototypeMemory {
 public:
  explicit PrototypeMemory(std::size_t capacity);

  /// Appends `background`, evicting the oldest entry beyond capacity, and
  /// recomputes the prototype. Throws degenerate_prototype when the mean has
  /// zero norm; the memory is left unchanged in that case.
  void update(const Embedding& background);

  /// Cosine similarity against the prototype, or nullopt before the first
  /// update.
  std::optional<double> query(const Embedding& frame) const;

  const std::optional<Embedding>& prototype() const noexcept { return prototype_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }

 private:
  std::size_t capacity_;
  std::deque<Embedding> entries_;
  std::optional<Embedding> prototype_;
};

/// Parsed form of the `--extractor` flag: `grid:G=<n>` or `file:<path>`.
struct ExtractorSpec {
  enum class Kind { grid, file };
  Kind kind = Kind::grid;
  int grid = 8;
  std::string path;

  static ExtractorSpec parse(const std::string& text);
  std::string to_string() const;
};

}  // namespace bem
