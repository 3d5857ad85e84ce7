#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "bem/config.hpp"
#include "bem/detection_io.hpp"
#include "bem/image_io.hpp"
#include "bem/pipeline.hpp"
#include "test_util.hpp"

namespace bem {
namespace {

TEST(DetectionJsonl, ParsesRecords) {
  const Detection d = parse_detection(R"({"frame_id": 3, "box": [1, 2.5, 4, 6], "score": 0.75, "label": 2})");
  EXPECT_EQ(d.frame_id, 3);
  EXPECT_EQ(d.box, (Box{1, 2.5, 4, 6}));
  EXPECT_EQ(d.score, 0.75);
  EXPECT_EQ(d.label, 2);
  const Detection n = parse_detection(R"({"frame_id": 0, "box": [0, 0, 1, 1], "score": 0.1, "label": null})");
  EXPECT_FALSE(n.label.has_value());
}

TEST(DetectionJsonl, SkipsBlankLinesAndRoundTrips) {
  const std::vector<Detection> d = {{0, {0, 0, 1, 1}, 0.5, std::nullopt}, {2, {1, 1, 3, 4}, 0.125, 1}};
  std::string text = "\n";
  for (const Detection& x : d) text += to_json_line(x) + "\n\n";
  std::istringstream in(text);
  const std::vector<Detection> back = read_detections(in);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].box, d[1].box);
  EXPECT_EQ(back[1].score, d[1].score);
  EXPECT_EQ(back[1].label, 1);
}

TEST(DetectionJsonl, ErrorsNameTheLine) {
  const char* bad[] = {
      R"(not json)",
      R"([1, 2])",
      R"({"box": [0, 0, 1, 1], "score": 0.5})",
      R"({"frame_id": 1.5, "box": [0, 0, 1, 1], "score": 0.5})",
      R"({"frame_id": 1, "box": [0, 0, 1], "score": 0.5})",
      R"({"frame_id": 1, "box": [2, 0, 1, 1], "score": 0.5})",
      R"({"frame_id": 1, "box": [0, 0, "x", 1], "score": 0.5})",
      R"({"frame_id": 1, "box": [0, 0, 1, 1]})",
      R"({"frame_id": 1, "box": [0, 0, 1, 1], "score": "high"})",
      R"({"frame_id": 1, "box": [0, 0, 1, 1], "score": 0.5, "label": "car"})",
  };
  for (const char* line : bad) {
    std::istringstream in(std::string(R"({"frame_id": 0, "box": [0, 0, 1, 1], "score": 0.5})") + "\n" + line + "\n");
    try {
      read_detections(in);
      ADD_FAILURE() << "accepted " << line;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::data);
      EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
  }
}

TEST(DetectionJsonl, MissingFile) {
  EXPECT_BEM_ERROR(read_detections(std::filesystem::path("/nonexistent/d.jsonl")), ErrorKind::data);
}

TEST(GroundTruthJsonl, DefaultsLabelAndRoundTrips) {
  const test::TempDir dir;
  const std::vector<GroundTruthBox> g = {{1, {0, 0, 2, 2}, 0}, {4, {3, 3, 5, 6}, 7}};
  write_ground_truth(dir / "gt.jsonl", g);
  const std::vector<GroundTruthBox> back = read_ground_truth(dir / "gt.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].label, 7);
  EXPECT_EQ(back[1].box, g[1].box);
  EXPECT_EQ(parse_ground_truth(R"({"frame_id": 0, "box": [0, 0, 1, 1]})").label, 0);
}

TEST(RescoredJsonl, CarriesAllScores) {
  RescoredDetection r;
  r.detection = {5, {0, 0, 2, 2}, 0.25, std::nullopt};
  r.score_raw = 0.9;
  r.score_calibrated = 0.9;
  r.similarity = 0.5;
  const std::string line = to_json_line(r);
  for (const char* key : {"\"score\"", "\"score_raw\"", "\"score_calibrated\"", "\"similarity\""})
    EXPECT_NE(line.find(key), std::string::npos) << key;
  EXPECT_EQ(parse_detection(line).score, 0.25);
}

TEST(Pnm, RoundTripGrayAndColor) {
  const test::TempDir dir;
  std::mt19937_64 rng(1);
  for (int ch : {1, 3}) {
    Frame f = test::random_frame(rng, 7, 5, 4, ch);
    for (float& v : f.pixels) v = quantize_u8(v);
    const auto path = dir / frame_filename(7, ch);
    write_pnm(path, f);
    const Frame back = read_pnm(path, 7);
    EXPECT_EQ(back.channels, ch);
    EXPECT_EQ(back.pixels, f.pixels);
  }
  EXPECT_EQ(frame_filename(12, 1), "frame_000012.pgm");
  EXPECT_EQ(frame_filename(12, 3), "frame_000012.ppm");
}

TEST(Pnm, RejectsBadFiles) {
  const test::TempDir dir;
  std::ofstream(dir / "a.pgm") << "P2\n2 2\n255\n0 0 0 0\n";
  EXPECT_BEM_ERROR(read_pnm(dir / "a.pgm"), ErrorKind::data);
  std::ofstream(dir / "b.pgm", std::ios::binary) << "P5\n2 2\n65535\n";
  EXPECT_BEM_ERROR(read_pnm(dir / "b.pgm"), ErrorKind::data);
  std::ofstream(dir / "c.pgm", std::ios::binary) << "P5\n4 4\n255\nabc";
  EXPECT_BEM_ERROR(read_pnm(dir / "c.pgm"), ErrorKind::data);
  EXPECT_BEM_ERROR(read_pnm(dir / "missing.pgm"), ErrorKind::data);
}

TEST(FrameDirectory, OrderedAndGapChecked) {
  const test::TempDir dir;
  std::vector<Frame> frames;
  for (int t = 0; t < 4; ++t) frames.push_back(Frame::filled(t, 3, 2, 1, quantize_u8(0.1f * t)));
  write_frame_directory(dir.path(), frames);
  std::ofstream(dir / "notes.txt") << "ignored";
  const std::vector<Frame> back = read_frame_directory(dir.path());
  ASSERT_EQ(back.size(), 4u);
  for (int t = 0; t < 4; ++t) {
    EXPECT_EQ(back[t].frame_id, t);
    EXPECT_EQ(back[t].pixels, frames[t].pixels);
  }
  std::filesystem::remove(dir / frame_filename(2, 1));
  try {
    read_frame_directory(dir.path());
    FAIL() << "gap accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::data);
    EXPECT_NE(std::string(e.what()).find("missing frame 2"), std::string::npos) << e.what();
  }
}

TEST(FrameDirectory, DimensionDrift) {
  const test::TempDir dir;
  write_frame_directory(dir.path(), {Frame::filled(0, 3, 2, 1, 0.0f), Frame::filled(1, 4, 2, 1, 0.0f)});
  EXPECT_BEM_ERROR(read_frame_directory(dir.path()), ErrorKind::data);
  EXPECT_BEM_ERROR(read_frame_directory(dir / "nope"), ErrorKind::data);
}

TEST(PipelineConfigJson, ReadsNestedKeysAndRoundTrips) {
  const PipelineConfig cfg = pipeline_config_from_json(R"({
    "window": 12, "memory": 3, "extractor": "grid:G=4",
    "rescore": {"alpha": 0.2, "gamma": 0.5, "rank_mode": "literal"},
    "calibration": {"mode": "temperature", "temperature": 2.0},
    "pauc": {"grid": "score-quantile", "points": 51},
    "paths": {"frames": "f", "detections": "d.jsonl", "output": "o"}
  })");
  EXPECT_EQ(cfg.window, 12);
  EXPECT_EQ(cfg.memory_capacity(), 3);
  EXPECT_EQ(cfg.extractor.grid, 4);
  EXPECT_EQ(cfg.rescore.alpha, 0.2);
  EXPECT_EQ(cfg.rescore.rank_mode, RankMode::literal);
  EXPECT_EQ(cfg.calibration.mode, CalibrationMode::temperature);
  EXPECT_EQ(cfg.pauc.grid, PAucConfig::Grid::score_quantile);
  EXPECT_EQ(cfg.pauc.points, 51);
  EXPECT_EQ(cfg.detections_path, "d.jsonl");
  const PipelineConfig again = pipeline_config_from_json(to_json(cfg));
  EXPECT_EQ(to_json(again), to_json(cfg));
}

TEST(PipelineConfigJson, MemoryDefaultsToWindow) {
  const PipelineConfig cfg = pipeline_config_from_json(R"({"window": 7})");
  EXPECT_EQ(cfg.memory_capacity(), 7);
}

TEST(PipelineConfigJson, RejectsTyposTypesAndRanges) {
  EXPECT_BEM_ERROR(pipeline_config_from_json(R"({"windw": 10})"), ErrorKind::invalid_config);
  EXPECT_BEM_ERROR(pipeline_config_from_json(R"({"rescore": {"alfa": 1}})"), ErrorKind::invalid_config);
  EXPECT_BEM_ERROR(pipeline_config_from_json(R"({"window": "ten"})"), ErrorKind::invalid_config);
  EXPECT_BEM_ERROR(pipeline_config_from_json(R"({"window": 10)"), ErrorKind::invalid_config);
  EXPECT_BEM_ERROR(pipeline_config_from_json(R"({"rescore": {"gamma": 0}})").validate(), ErrorKind::invalid_config);
  EXPECT_BEM_ERROR(pipeline_config_from_json(R"({"calibration": {"mode": "platt"}})"), ErrorKind::invalid_config);
  EXPECT_BEM_ERROR(pipeline_config_from_json(R"({"pauc": {"grid": "log"}})"), ErrorKind::invalid_config);
  EXPECT_BEM_ERROR(pipeline_config_from_json(R"({"window": 0})").validate(), ErrorKind::invalid_config);
}

TEST(SimulationConfigJson, RoundTrips) {
  const SimulationConfig cfg = simulation_config_from_json(R"({
    "scene": {"seed": 5, "width": 64, "height": 48, "frame_count": 10,
              "schedule": {"kind": "ramp", "from": 0, "to": 6}},
    "detector": {"seed": 6, "fp_rate_per_object": 0.1, "fp_density_exponent": 2.0}
  })");
  EXPECT_EQ(cfg.scene.width, 64);
  EXPECT_EQ(cfg.scene.schedule.kind, CountSchedule::Kind::ramp);
  EXPECT_EQ(cfg.scene.schedule.ramp_to, 6);
  EXPECT_EQ(cfg.detector.fp_density_exponent, 2.0);
  EXPECT_EQ(to_json(simulation_config_from_json(to_json(cfg))), to_json(cfg));
  EXPECT_BEM_ERROR(simulation_config_from_json(R"({"scene": {"colour": 1}})"), ErrorKind::invalid_config);
}

}  // namespace
}  // namespace bem
