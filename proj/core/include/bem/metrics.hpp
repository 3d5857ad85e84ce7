#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bem/detection.hpp"

namespace bem {

double iou(const Box& a, const Box& b);

/// Per-detection match outcome, aligned with the input order.
struct MatchResult {
  std::vector<bool> true_positive;
  std::vector<int> matched_gt;  ///< index into the gt span, -1 for false positives
  std::size_t tp_count() const;
};

/// COCO-style greedy matching. Detections are visited by descending score
/// (ties: frame, box, label, then input index); each takes the unmatched
/// ground truth in the same frame and class with the highest IoU >= threshold.
/// Classes are compared only when the detection carries a label.
MatchResult match_detections(std::span<const Detection> dets, std::span<const GroundTruthBox> gts,
                             double iou_threshold = 0.5);

/// 101-point interpolated AP at IoU 0.50, averaged over labels present in the
/// ground truth. Throws undefined_metric when there is no ground truth.
double average_precision_50(std::span<const Detection> dets, std::span<const GroundTruthBox> gts);

struct PAucConfig {
  enum class Grid { uniform, score_quantile };
  Grid grid = Grid::uniform;
  int points = 101;
  /// Precision assigned to thresholds that no detection survives.
  double empty_precision = 1.0;

  void validate() const;
};

struct CurvePoint {
  double tau = 0.0;
  double precision = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
};

struct PAucResult {
  double value = 0.0;
  std::vector<CurvePoint> curve;  ///< thresholds strictly decreasing
};

/// Thresholds in integration order (strictly decreasing, 1 down to 0).
std::vector<double> threshold_grid(std::span<const double> scores, const PAucConfig& cfg);

/// Precision integrated over confidence: sum_j P(tau_j) (tau_j - tau_{j+1}),
/// where P(tau) uses detections scoring >= tau.
PAucResult p_auc(std::span<const Detection> dets, std::span<const GroundTruthBox> gts,
                 const PAucConfig& cfg);

/// Same integral from precomputed match flags (avoids rematching per frame).
PAucResult p_auc_from_flags(std::span<const double> scores, const std::vector<bool>& true_positive,
                            const PAucConfig& cfg);

/// Spearman rank correlation with average ranks for ties. Throws
/// undefined_metric for fewer than 3 samples or a constant series.
double spearman(std::span<const double> x, std::span<const double> y);

struct FrameMetrics {
  std::int64_t frame_id = 0;
  std::optional<double> similarity;
  std::size_t object_count = 0;
  std::size_t detections = 0;
  double p_auc = 0.0;
};

struct SimilarityCorrelations {
  double rho_count = 0.0;  ///< corr(c, object count), expected negative
  double rho_pauc = 0.0;   ///< corr(c, per-frame P-AUC), expected positive
};

/// Uses frames that carry a similarity value.
SimilarityCorrelations similarity_correlations(std::span<const FrameMetrics> frames);

struct EvalReport {
  double map50 = 0.0;
  double p_auc = 0.0;             ///< corpus-level
  double p_auc_frame_mean = 0.0;  ///< mean of per-frame values
  std::size_t detections = 0;
  std::size_t ground_truth = 0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::vector<CurvePoint> curve;
  std::vector<FrameMetrics> frames;
};

struct FrameSimilarity {
  std::int64_t frame_id = 0;
  std::optional<double> similarity;
};

/// Corpus and per-frame metrics. `frames` lists every frame to report (with
/// its similarity, if known); detections or ground truth outside it are a
/// data error. Per-frame work runs on `worker_count()` threads.
EvalReport evaluate(std::span<const Detection> dets, std::span<const GroundTruthBox> gts,
                    std::span<const FrameSimilarity> frames, const PAucConfig& cfg);

struct SimilarityBin {
  double c_lo = 0.0;
  double c_hi = 0.0;
  std::size_t frames = 0;
  std::optional<double> delta_pauc;  ///< empty bins carry no value
};

/// `edges` must be strictly increasing with at least two entries.
std::vector<SimilarityBin> binned_delta_pauc(const EvalReport& baseline, const EvalReport& bem,
                                             std::span<const double> edges);

/// `bins` equal-width bins spanning the observed similarity range of `bem`.
std::vector<SimilarityBin> binned_delta_pauc(const EvalReport& baseline, const EvalReport& bem,
                                             int bins = 10);

std::string to_json(const EvalReport& report, int indent = 2);
std::string curve_csv(const std::vector<CurvePoint>& curve);
std::string bins_csv(const std::vector<SimilarityBin>& bins);

/// `frame_id,similarity` rows; an empty similarity means none (cold start).
std::string similarity_csv(std::span<const FrameSimilarity> frames);
std::vector<FrameSimilarity> parse_similarity_csv(const std::string& text);

}  // namespace bem
