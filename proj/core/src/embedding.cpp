#include "bem/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bem/error.hpp"

namespace bem {

Embedding Embedding::normalized(std::span<const double> raw) {
  require(!raw.empty(), ErrorKind::invalid_argument, "embedding has zero dimensions");
  double sq = 0.0;
  for (double v : raw) {
    require(std::isfinite(v), ErrorKind::invalid_argument, "embedding has a non-finite entry");
    sq += v * v;
  }
  const double norm = std::sqrt(sq);
  require(norm > 0.0 && std::isfinite(norm), ErrorKind::degenerate_feature,
          "feature vector has zero norm");
  Embedding e;
  e.values_.reserve(raw.size());
  for (double v : raw) e.values_.push_back(v / norm);
  return e;
}

GridStatsExtractor::GridStatsExtractor(int grid, int channels) : grid_(grid), channels_(channels) {
  require(grid >= 1, ErrorKind::invalid_config, "grid-stats grid size must be >= 1");
  require(channels == 1 || channels == 3, ErrorKind::invalid_config,
          "grid-stats channels must be 1 or 3");
}

std::string GridStatsExtractor::name() const { return "grid:G=" + std::to_string(grid_); }

std::size_t GridStatsExtractor::dim() const {
  return 2u * static_cast<std::size_t>(channels_) * static_cast<std::size_t>(grid_ * grid_);
}

FeatureMap GridStatsExtractor::features(const Frame& image) const {
  require(image.channels == channels_, ErrorKind::invalid_argument,
          "grid-stats extractor expects " + std::to_string(channels_) + " channels, got " +
              std::to_string(image.channels));
  require(image.width >= grid_ && image.height >= grid_, ErrorKind::invalid_argument,
          "image " + std::to_string(image.width) + "x" + std::to_string(image.height) +
              " is smaller than the " + std::to_string(grid_) + "x" + std::to_string(grid_) + " grid");
  FeatureMap map;
  map.dim = dim();
  map.positions = 1;
  map.values.reserve(map.dim);
  for (int gy = 0; gy < grid_; ++gy) {
    const int y0 = gy * image.height / grid_;
    const int y1 = (gy + 1) * image.height / grid_;
    for (int gx = 0; gx < grid_; ++gx) {
      const int x0 = gx * image.width / grid_;
      const int x1 = (gx + 1) * image.width / grid_;
      const double n = static_cast<double>((y1 - y0) * (x1 - x0));
      for (int c = 0; c < channels_; ++c) {
        double sum = 0.0;
        for (int y = y0; y < y1; ++y)
          for (int x = x0; x < x1; ++x) sum += static_cast<double>(image.at(x, y, c));
        const double mean = sum / n;
        double var = 0.0;
        for (int y = y0; y < y1; ++y)
          for (int x = x0; x < x1; ++x) {
            const double d = static_cast<double>(image.at(x, y, c)) - mean;
            var += d * d;
          }
        map.values.push_back(mean);
        map.values.push_back(std::sqrt(var / n));
      }
    }
  }
  return map;
}

Embedding pool_and_normalize(const FeatureMap& map) {
  require(map.dim > 0 && map.positions > 0 && map.values.size() == map.dim * map.positions,
          ErrorKind::invalid_argument, "feature map shape does not match its buffer");
  std::vector<double> pooled(map.dim, 0.0);
  for (std::size_t p = 0; p < map.positions; ++p)
    for (std::size_t d = 0; d < map.dim; ++d) pooled[d] += map.values[p * map.dim + d];
  const double n = static_cast<double>(map.positions);
  for (double& v : pooled) v /= n;
  return Embedding::normalized(pooled);
}

Embedding extract_embedding(const Frame& image, const FeatureExtractor& extractor) {
  FeatureMap map = extractor.features(image);
  require(map.dim == extractor.dim(), ErrorKind::internal,
          extractor.name() + " produced a feature map of the wrong dimension");
  return pool_and_normalize(map);
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
  require(a.dim() == b.dim(), ErrorKind::invalid_argument,
          "embedding dims differ (" + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) dot += a[i] * b[i];
  return std::clamp(dot, -1.0, 1.0);
}

PrototypeMemory::PrototypeMemory(std::size_t capacity) : capacity_(capacity) {
  require(capacity >= 1, ErrorKind::invalid_config, "prototype memory capacity must be >= 1");
}

void PrototypeMemory::update(const Embedding& background) {
  if (!entries_.empty()) {
    require(background.dim() == entries_.front().dim(), ErrorKind::invalid_argument,
            "background embedding dim changed");
  }
  std::deque<Embedding> next = entries_;
  next.push_back(background);
  while (next.size() > capacity_) next.pop_front();

  std::vector<double> mean(background.dim(), 0.0);
  for (const Embedding& e : next)
    for (std::size_t i = 0; i < e.dim(); ++i) mean[i] += e[i];
  const double n = static_cast<double>(next.size());
  for (double& v : mean) v /= n;

  std::optional<Embedding> proto;
  try {
    proto = Embedding::normalized(mean);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::degenerate_feature)
      fail(ErrorKind::degenerate_prototype, "prototype mean has zero norm");
    throw;
  }
  entries_ = std::move(next);
  prototype_ = std::move(proto);
}

std::optional<double> PrototypeMemory::query(const Embedding& frame) const {
  if (!prototype_) return std::nullopt;
  return cosine_similarity(frame, *prototype_);
}

ExtractorSpec ExtractorSpec::parse(const std::string& text) {
  ExtractorSpec spec;
  if (text.rfind("file:", 0) == 0) {
    spec.kind = Kind::file;
    spec.path = text.substr(5);
    require(!spec.path.empty(), ErrorKind::invalid_config, "extractor 'file:' needs a path");
    return spec;
  }
  if (text == "grid") return spec;
  if (text.rfind("grid:G=", 0) == 0) {
    const std::string digits = text.substr(7);
    try {
      std::size_t used = 0;
      spec.grid = std::stoi(digits, &used);
      if (used == digits.size() && spec.grid >= 1) return spec;
    } catch (const std::exception&) {
    }
  }
  fail(ErrorKind::invalid_config,
       "unknown extractor '" + text + "' (expected grid:G=<n> or file:<path>)");
}

std::string ExtractorSpec::to_string() const {
  return kind == Kind::file ? "file:" + path : "grid:G=" + std::to_string(grid);
}

}  // namespace bem
