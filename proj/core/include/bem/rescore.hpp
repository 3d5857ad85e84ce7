#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bem/detection.hpp"

namespace bem {

enum class CalibrationMode { none, clip, temperature };
enum class RankMode { intent, literal };

struct CalibrationConfig {
  CalibrationMode mode = CalibrationMode::clip;
  double clip_epsilon = 1e-6;
  double temperature = 1.0;

  void validate() const;
};

struct RescoreConfig {
  double alpha = 0.05;
  double gamma = 1.0;
  /// Floor on the similarity in the penalty denominator.
  double delta = 1e-6;
  RankMode rank_mode = RankMode::intent;

  void validate() const;
};

CalibrationMode parse_calibration_mode(const std::string& text);
RankMode parse_rank_mode(const std::string& text);
std::string to_string(CalibrationMode mode);
std::string to_string(RankMode mode);

double logit(double p);
/// Numerically stable logistic function.
double sigmoid(double z);

/// clip: min(max(s, eps), 1 - eps). none: the same clamp, only to keep the
/// logit finite. temperature: sigmoid(logit(clip(s)) / T).
double calibrate(double score, const CalibrationConfig& cfg);
std::vector<double> calibrate(std::span<const double> scores, const CalibrationConfig& cfg);

/// 1-based descending-confidence ranks. Stable: equal scores keep input order.
std::vector<int> descending_ranks(std::span<const double> scores);

/// literal: w = (N - r) / (N + 1). intent: w = (r - 1) / (N + 1), so the most
/// confident proposal is never penalized. `ranks` must be a permutation of 1..N.
std::vector<double> rank_weights(std::span<const int> ranks, RankMode mode);

struct RescoredDetection {
  Detection detection;  ///< `score` holds the rescored value s'.
  double score_raw = 0.0;
  double score_calibrated = 0.0;
  std::optional<double> similarity;
};

/// Smallest score the rescorer emits; keeps logit(s') finite downstream.
inline constexpr double kMinRescoredScore = 2.2250738585072014e-308;

/// Penalizes one frame's proposals:
///   s' = sigmoid(logit(s~) - (alpha / gamma) * w / max(c, delta))
/// With no similarity (cold start) the calibrated scores pass through.
/// Output order and boxes match the input.
std::vector<RescoredDetection> rescore(std::span<const Detection> detections,
                                       std::optional<double> similarity,
                                       const RescoreConfig& rcfg, const CalibrationConfig& ccfg);

}  // namespace bem
