#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bem/rescore.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace bem {
namespace {

std::vector<Detection> dets_with(std::initializer_list<double> scores) {
  std::vector<Detection> out;
  int k = 0;
  for (double s : scores) out.push_back({0, {double(k), 0.0, double(k) + 1.0, 1.0}, s, std::nullopt}), ++k;
  return out;
}

RescoreConfig rcfg(double alpha, double gamma, RankMode mode = RankMode::intent) {
  RescoreConfig r;
  r.alpha = alpha;
  r.gamma = gamma;
  r.rank_mode = mode;
  return r;
}

TEST(Calibrate, ClipMode) {
  const CalibrationConfig c;
  EXPECT_EQ(calibrate(0.8, c), 0.8);
  EXPECT_EQ(calibrate(1.0, c), 1.0 - 1e-6);
  EXPECT_EQ(calibrate(0.0, c), 1e-6);
}

TEST(Calibrate, NoneModeStillKeepsLogitFinite) {
  CalibrationConfig c;
  c.mode = CalibrationMode::none;
  EXPECT_EQ(calibrate(0.37, c), 0.37);
  EXPECT_TRUE(std::isfinite(logit(calibrate(1.0, c))));
}

TEST(Calibrate, TemperatureTwo) {
  CalibrationConfig c;
  c.mode = CalibrationMode::temperature;
  c.temperature = 2.0;
  EXPECT_NEAR(calibrate(0.8, c), 2.0 / 3.0, 1e-12);
}

TEST(Calibrate, SharpTemperatureStaysInside) {
  CalibrationConfig c;
  c.mode = CalibrationMode::temperature;
  c.temperature = 1e-3;
  const double hi = calibrate(0.99, c);
  const double lo = calibrate(0.01, c);
  EXPECT_LT(hi, 1.0);
  EXPECT_GT(lo, 0.0);
  EXPECT_TRUE(std::isfinite(logit(hi)));
  EXPECT_TRUE(std::isfinite(logit(lo)));
}

TEST(Calibrate, RejectsBadScores) {
  const CalibrationConfig c;
  EXPECT_BEM_ERROR(calibrate(NAN, c), ErrorKind::invalid_argument);
  EXPECT_BEM_ERROR(calibrate(INFINITY, c), ErrorKind::invalid_argument);
  EXPECT_BEM_ERROR(calibrate(1.5, c), ErrorKind::invalid_argument);
}

TEST(Calibrate, ConfigValidation) {
  CalibrationConfig c;
  c.temperature = 0.0;
  EXPECT_BEM_ERROR(c.validate(), ErrorKind::invalid_config);
  c = CalibrationConfig{};
  c.clip_epsilon = 0.0;
  EXPECT_BEM_ERROR(c.validate(), ErrorKind::invalid_config);
  EXPECT_BEM_ERROR(parse_calibration_mode("platt"), ErrorKind::invalid_config);
  EXPECT_EQ(parse_calibration_mode(to_string(CalibrationMode::temperature)), CalibrationMode::temperature);
}

TEST(RescoreConfig, Validation) {
  EXPECT_BEM_ERROR(rcfg(0.1, 0.0).validate(), ErrorKind::invalid_config);
  EXPECT_BEM_ERROR(rcfg(0.1, -1.0).validate(), ErrorKind::invalid_config);
  EXPECT_BEM_ERROR(rcfg(-0.1, 1.0).validate(), ErrorKind::invalid_config);
  RescoreConfig r;
  r.delta = 0.0;
  EXPECT_BEM_ERROR(r.validate(), ErrorKind::invalid_config);
  EXPECT_BEM_ERROR(parse_rank_mode("reverse"), ErrorKind::invalid_config);
  EXPECT_EQ(parse_rank_mode(to_string(RankMode::literal)), RankMode::literal);
}

TEST(RankWeights, FourProposals) {
  const std::vector<int> r = {1, 2, 3, 4};
  const std::vector<double> lit = rank_weights(r, RankMode::literal);
  const std::vector<double> intent = rank_weights(r, RankMode::intent);
  const std::vector<double> want_lit = {0.6, 0.4, 0.2, 0.0};
  const std::vector<double> want_int = {0.0, 0.2, 0.4, 0.6};
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(lit[i], want_lit[i], 1e-15);
    EXPECT_NEAR(intent[i], want_int[i], 1e-15);
  }
}

TEST(RankWeights, SingletonAndEmpty) {
  const std::vector<int> one = {1};
  EXPECT_EQ(rank_weights(one, RankMode::literal)[0], 0.0);
  EXPECT_EQ(rank_weights(one, RankMode::intent)[0], 0.0);
  EXPECT_TRUE(rank_weights(std::vector<int>{}, RankMode::intent).empty());
}

TEST(RankWeights, RejectsNonPermutations) {
  EXPECT_BEM_ERROR(rank_weights(std::vector<int>{1, 1}, RankMode::intent), ErrorKind::invalid_argument);
  EXPECT_BEM_ERROR(rank_weights(std::vector<int>{0, 1}, RankMode::intent), ErrorKind::invalid_argument);
  EXPECT_BEM_ERROR(rank_weights(std::vector<int>{1, 3}, RankMode::intent), ErrorKind::invalid_argument);
}

TEST(DescendingRanks, MatchesCountingOracleWithTies) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> s(12);
    for (double& v : s) v = static_cast<double>(rng() % 5) / 4.0;
    const std::vector<int> got = descending_ranks(s);
    EXPECT_EQ(got, oracle::descending_ranks(s));
  }
}

TEST(Rescore, HandComputedCase) {
  // Third-ranked of five gets w = 2/6; choose c so the penalty is exactly 1.
  RescoreConfig r = rcfg(0.1, 0.05);
  const std::vector<Detection> d = dets_with({0.95, 0.9, 0.8, 0.3, 0.2});
  const double c = 2.0 * (2.0 / 6.0);
  const std::vector<RescoredDetection> out = rescore(d, c, r, CalibrationConfig{});
  EXPECT_NEAR(out[2].detection.score, oracle::sigmoid(std::log(4.0) - 1.0), 1e-12);
  EXPECT_NEAR(out[2].detection.score, 0.5953903248083103, 1e-12);
  EXPECT_EQ(out[0].detection.score, 0.95);
}

TEST(Rescore, AbsentSimilarityPassesThrough) {
  const std::vector<Detection> d = dets_with({0.9, 0.5, 1.0});
  const std::vector<RescoredDetection> out = rescore(d, std::nullopt, rcfg(0.5, 0.1), CalibrationConfig{});
  EXPECT_EQ(out[0].detection.score, 0.9);
  EXPECT_EQ(out[1].detection.score, 0.5);
  EXPECT_EQ(out[2].detection.score, 1.0 - 1e-6);
  EXPECT_FALSE(out[0].similarity.has_value());
  EXPECT_EQ(out[2].score_raw, 1.0);
}

TEST(Rescore, ZeroAlphaIsNeutral) {
  const std::vector<Detection> d = dets_with({0.9, 0.5, 0.4});
  const std::vector<RescoredDetection> out = rescore(d, 0.1, rcfg(0.0, 1.0), CalibrationConfig{});
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(out[i].detection.score, d[i].score);
}

TEST(Rescore, SingletonIsNeverPenalized) {
  const std::vector<Detection> d = dets_with({0.42});
  for (RankMode m : {RankMode::intent, RankMode::literal})
    EXPECT_EQ(rescore(d, 0.01, rcfg(10.0, 0.01, m), CalibrationConfig{})[0].detection.score, 0.42);
}

TEST(Rescore, NegativeSimilarityDrivesTowardZeroWithoutNaN) {
  const std::vector<Detection> d = dets_with({0.9, 0.8});
  const std::vector<RescoredDetection> out = rescore(d, -0.5, rcfg(0.1, 1.0), CalibrationConfig{});
  EXPECT_EQ(out[0].detection.score, 0.9);
  EXPECT_GT(out[1].detection.score, 0.0);
  EXPECT_LT(out[1].detection.score, 1e-300);
  EXPECT_FALSE(std::isnan(out[1].detection.score));
}

TEST(Rescore, PreservesBoxesAndOrder) {
  const std::vector<Detection> d = dets_with({0.3, 0.9, 0.6});
  const std::vector<RescoredDetection> out = rescore(d, 0.5, rcfg(0.3, 0.5), CalibrationConfig{});
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(out[i].detection.box, d[i].box);
}

TEST(Rescore, LiteralModePenalizesTheTopProposal) {
  const std::vector<Detection> d = dets_with({0.9, 0.8, 0.7, 0.6});
  const auto intent = rescore(d, 0.5, rcfg(0.2, 1.0, RankMode::intent), CalibrationConfig{});
  const auto literal = rescore(d, 0.5, rcfg(0.2, 1.0, RankMode::literal), CalibrationConfig{});
  EXPECT_EQ(intent[0].detection.score, 0.9);
  EXPECT_LT(literal[0].detection.score, 0.9);
  EXPECT_EQ(literal[3].detection.score, 0.6);
  EXPECT_LT(intent[3].detection.score, 0.6);
}

TEST(Rescore, MatchesClosedFormOracle) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<Detection> d;
    const int n = 1 + static_cast<int>(rng() % 20);
    for (int i = 0; i < n; ++i) d.push_back({0, {0, 0, 1, 1}, 0.01 + 0.98 * u(rng), std::nullopt});
    const double c = u(rng) * 2.0 - 1.0;
    const RescoreConfig r = rcfg(u(rng), 0.01 + u(rng), rep % 2 ? RankMode::intent : RankMode::literal);
    const auto out = rescore(d, c, r, CalibrationConfig{});
    std::vector<double> s;
    for (const Detection& x : d) s.push_back(x.score);
    const std::vector<int> ranks = oracle::descending_ranks(s);
    for (int i = 0; i < n; ++i) {
      const double w = r.rank_mode == RankMode::intent ? (ranks[i] - 1.0) / (n + 1.0) : (n - ranks[i]) / (n + 1.0);
      const double want = oracle::sigmoid(std::log(s[i] / (1.0 - s[i])) - r.alpha / r.gamma * w / std::max(c, r.delta));
      EXPECT_NEAR(out[i].detection.score, std::max(want, kMinRescoredScore), 1e-9 * std::max(1.0, want));
    }
  }
}

TEST(Rescore, SuppressionOnlyAndMonotoneInSimilarity) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<Detection> d;
    for (int i = 0; i < 15; ++i) d.push_back({0, {0, 0, 1, 1}, u(rng), std::nullopt});
    const RescoreConfig r = rcfg(0.5 * u(rng), 0.05 + u(rng));
    double c_prev = 1.0;
    std::vector<double> prev;
    for (double c : {1.0, 0.7, 0.4, 0.1, 0.01}) {
      const auto out = rescore(d, c, r, CalibrationConfig{});
      for (std::size_t i = 0; i < d.size(); ++i) {
        EXPECT_LE(out[i].detection.score, out[i].score_calibrated);
        EXPECT_GT(out[i].detection.score, 0.0);
        EXPECT_LT(out[i].detection.score, 1.0);
        if (!prev.empty()) EXPECT_LE(out[i].detection.score, prev[i]) << c << " vs " << c_prev;
      }
      prev.clear();
      for (const auto& x : out) prev.push_back(x.detection.score);
      c_prev = c;
    }
  }
}

TEST(Rescore, IntentModePreservesOrder) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<Detection> d;
    for (int i = 0; i < 25; ++i) d.push_back({0, {0, 0, 1, 1}, std::round(u(rng) * 50.0) / 50.0, std::nullopt});
    const auto out = rescore(d, 0.05 + 0.95 * u(rng), rcfg(0.5 * u(rng), 0.05 + u(rng)), CalibrationConfig{});
    for (std::size_t i = 0; i < d.size(); ++i)
      for (std::size_t j = 0; j < d.size(); ++j)
        if (out[i].score_calibrated > out[j].score_calibrated)
          EXPECT_GE(out[i].detection.score, out[j].detection.score);
  }
}

TEST(Rescore, RejectsOutOfRangeSimilarity) {
  const std::vector<Detection> d = dets_with({0.5});
  EXPECT_BEM_ERROR(rescore(d, 1.5, rcfg(0.1, 1.0), CalibrationConfig{}), ErrorKind::invalid_argument);
  EXPECT_BEM_ERROR(rescore(d, NAN, rcfg(0.1, 1.0), CalibrationConfig{}), ErrorKind::invalid_argument);
  EXPECT_BEM_ERROR(rescore(d, 0.5, rcfg(0.1, 0.0), CalibrationConfig{}), ErrorKind::invalid_config);
}

TEST(Rescore, EmptyFrame) {
  EXPECT_TRUE(rescore(std::vector<Detection>{}, 0.5, rcfg(0.1, 1.0), CalibrationConfig{}).empty());
}

}  // namespace
}  // namespace bem
