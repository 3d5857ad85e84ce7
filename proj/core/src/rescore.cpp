#include "bem/rescore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bem/error.hpp"

namespace bem {

void CalibrationConfig::validate() const {
  require(clip_epsilon > 0.0 && clip_epsilon < 0.5, ErrorKind::invalid_config,
          "clip_epsilon must lie in (0, 0.5)");
  require(temperature > 0.0 && std::isfinite(temperature), ErrorKind::invalid_config,
          "calibration temperature must be positive");
}

void RescoreConfig::validate() const {
  require(alpha >= 0.0 && std::isfinite(alpha), ErrorKind::invalid_config, "alpha must be >= 0");
  require(gamma > 0.0 && std::isfinite(gamma), ErrorKind::invalid_config, "gamma must be > 0");
  require(delta > 0.0 && delta <= 1.0, ErrorKind::invalid_config, "delta must lie in (0, 1]");
}

CalibrationMode parse_calibration_mode(const std::string& text) {
  if (text == "none") return CalibrationMode::none;
  if (text == "clip") return CalibrationMode::clip;
  if (text == "temperature") return CalibrationMode::temperature;
  fail(ErrorKind::invalid_config, "unknown calibration mode '" + text + "'");
}

RankMode parse_rank_mode(const std::string& text) {
  if (text == "intent") return RankMode::intent;
  if (text == "literal") return RankMode::literal;
  fail(ErrorKind::invalid_config, "unknown rank mode '" + text + "'");
}

std::string to_string(CalibrationMode mode) {
  switch (mode) {
    case CalibrationMode::none: return "none";
    case CalibrationMode::clip: return "clip";
    case CalibrationMode::temperature: return "temperature";
  }
  return "clip";
}

std::string to_string(RankMode mode) { return mode == RankMode::literal ? "literal" : "intent"; }

double logit(double p) { return std::log(p) - std::log1p(-p); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double calibrate(double score, const CalibrationConfig& cfg) {
  require(std::isfinite(score), ErrorKind::invalid_argument, "detection score is not finite");
  require(score >= 0.0 && score <= 1.0, ErrorKind::invalid_argument,
          "detection score " + std::to_string(score) + " is outside [0,1]");
  const double lo = cfg.clip_epsilon;
  const double hi = 1.0 - cfg.clip_epsilon;
  const double clipped = std::clamp(score, lo, hi);
  if (cfg.mode != CalibrationMode::temperature) return clipped;
  // Re-clamp after sharpening.
  return std::clamp(sigmoid(logit(clipped) / cfg.temperature), lo, hi);
}

std::vector<double> calibrate(std::span<const double> scores, const CalibrationConfig& cfg) {
  cfg.validate();
  std::vector<double> out;
  out.reserve(scores.size());
  for (double s : scores) out.push_back(calibrate(s, cfg));
  return out;
}

std::vector<int> descending_ranks(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<int> ranks(scores.size());
  for (std::size_t k = 0; k < order.size(); ++k) ranks[order[k]] = static_cast<int>(k + 1);
  return ranks;
}

std::vector<double> rank_weights(std::span<const int> ranks, RankMode mode) {
  const std::size_t n = ranks.size();
  std::vector<bool> seen(n + 1, false);
  for (int r : ranks) {
    require(r >= 1 && static_cast<std::size_t>(r) <= n && !seen[static_cast<std::size_t>(r)],
            ErrorKind::invalid_argument, "ranks must be a permutation of 1..N");
    seen[static_cast<std::size_t>(r)] = true;
  }
  const double big_n = static_cast<double>(n);
  std::vector<double> w;
  w.reserve(n);
  for (int r : ranks) {
    const double rank = static_cast<double>(r);
    w.push_back(mode == RankMode::literal ? (big_n - rank) / (big_n + 1.0)
                                          : (rank - 1.0) / (big_n + 1.0));
  }
  return w;
}

std::vector<RescoredDetection> rescore(std::span<const Detection> detections,
                                       std::optional<double> similarity,
                                       const RescoreConfig& rcfg, const CalibrationConfig& ccfg) {
  rcfg.validate();
  ccfg.validate();
  if (similarity) {
    require(std::isfinite(*similarity) && *similarity >= -1.0 && *similarity <= 1.0,
            ErrorKind::invalid_argument, "similarity must lie in [-1, 1]");
  }

  std::vector<RescoredDetection> out;
  out.reserve(detections.size());
  std::vector<double> calibrated;
  calibrated.reserve(detections.size());
  for (const Detection& det : detections) {
    const double s = calibrate(det.score, ccfg);
    calibrated.push_back(s);
    RescoredDetection r;
    r.detection = det;
    r.detection.score = s;
    r.score_raw = det.score;
    r.score_calibrated = s;
    r.similarity = similarity;
    out.push_back(std::move(r));
  }
  if (!similarity || rcfg.alpha == 0.0) return out;

  const std::vector<double> weights = rank_weights(descending_ranks(calibrated), rcfg.rank_mode);
  const double scale = rcfg.alpha / rcfg.gamma;
  const double divisor = std::max(*similarity, rcfg.delta);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double penalty = scale * weights[i] / divisor;
    require(std::isfinite(penalty), ErrorKind::internal, "rescore penalty is not finite");
    if (penalty == 0.0) continue;
    const double s_tilde = calibrated[i];
    const double s_new = sigmoid(logit(s_tilde) - penalty);
    // min() absorbs rounding when the penalty is below one ulp of the logit.
    out[i].detection.score = std::max(std::min(s_new, s_tilde), kMinRescoredScore);
  }
  return out;
}

}  // namespace bem
