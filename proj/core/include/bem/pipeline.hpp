#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bem/background.hpp"
#include "bem/detection.hpp"
#include "bem/embedding.hpp"
#include "bem/image.hpp"
#include "bem/metrics.hpp"
#include "bem/rescore.hpp"

namespace bem {

struct PipelineConfig {
  int window = 25;
  /// Prototype memory capacity; 0 ties it to `window`.
  int memory = 0;
  RescoreConfig rescore;
  CalibrationConfig calibration;
  QualityConfig quality;
  ExtractorSpec extractor;
  /// Only original detections scoring at least this much are masked out of
  /// the background average.
  double mask_threshold = 0.25;
  int mask_dilation = 2;
  /// false forces every frame through unrescored (memory stage disabled).
  bool memory_enabled = true;
  PAucConfig pauc;
  int similarity_bins = 10;

  std::string frames_dir;
  std::string detections_path;
  std::string ground_truth_path;  ///< optional; evaluation is skipped without it
  std::string output_dir;

  int memory_capacity() const noexcept { return memory > 0 ? memory : window; }
  void validate() const;
};

struct StageTimings {
  std::uint64_t mask_ns = 0;
  std::uint64_t background_ns = 0;
  std::uint64_t embedding_ns = 0;
  std::uint64_t rescore_ns = 0;
  std::size_t frames = 0;
};

struct PipelineResult {
  /// Same order as the input detections.
  std::vector<RescoredDetection> detections;
  /// One entry per frame in stream order; similarity is empty while the
  /// prototype does not exist yet.
  std::vector<FrameSimilarity> frames;
  /// Background of the most recent completed window.
  std::optional<BackgroundEstimate> last_background;
  std::size_t prototype_updates = 0;
  bool cold_start_only = true;
  StageTimings timings;
};

/// Causal stream loop. Frames of window w (L frames each) are scored against
/// the prototype built from windows < w; when window w completes, its masked
/// background is embedded and pushed into the memory. The first window and a
/// trailing partial window never refresh the prototype.
///
/// `frames` must have consecutive ids and equal dims. `external` supplies one
/// precomputed embedding per frame (extractor `file:`); the background
/// embedding of a window is then the renormalized mean of its frame rows.
PipelineResult run_pipeline(std::span<const Frame> frames, std::span<const Detection> detections,
                            const PipelineConfig& cfg,
                            const std::vector<Embedding>* external = nullptr);

struct PipelineEvaluation {
  EvalReport baseline;  ///< calibrated input scores
  EvalReport bem;       ///< rescored scores
  std::optional<SimilarityCorrelations> correlations;
  std::vector<SimilarityBin> bins;
};

PipelineEvaluation evaluate_pipeline(const PipelineResult& result,
                                     std::span<const GroundTruthBox> gts,
                                     const PipelineConfig& cfg);

/// Reads inputs named in `cfg`, runs the pipeline and writes into
/// cfg.output_dir: rescored.jsonl, similarity.csv, run.lock.json, timing.json,
/// report.json and, when ground truth is given, curve.csv and bins.csv.
PipelineResult run_pipeline_files(const PipelineConfig& cfg);

std::string pipeline_report_json(const PipelineResult& result, const PipelineEvaluation* eval);

struct StageStats {
  double median_ns = 0.0;
  double p95_ns = 0.0;
};

/// Per-frame added latency of the BEM stages, file I/O excluded. The
/// background stage (mask + masked average + background embedding + memory
/// update) is amortized over the L frames of its window.
struct OverheadReport {
  StageStats background_update;
  StageStats embedding;
  StageStats rescore;
  StageStats total;
  std::size_t samples = 0;
};

OverheadReport measure_overhead(std::span<const Frame> frames, std::span<const Detection> detections,
                                const PipelineConfig& cfg, int repetitions);

}  // namespace bem
