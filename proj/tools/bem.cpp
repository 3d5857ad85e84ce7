#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "bem/background.hpp"
#include "bem/config.hpp"
#include "bem/detection_io.hpp"
#include "bem/error.hpp"
#include "bem/image_io.hpp"
#include "bem/metrics.hpp"
#include "bem/pipeline.hpp"
#include "bem/rescore.hpp"
#include "bem/simulator.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

std::string load_config_text(const std::string& path) {
  try {
    return bem::read_text_file(path);
  } catch (const bem::Error&) {
    bem::fail(bem::ErrorKind::invalid_config, "config " + path + " unreadable");
  }
}

bem::PipelineConfig load_pipeline_config(const std::string& path) {
  if (path.empty()) return {};
  return bem::pipeline_config_from_json(load_config_text(path));
}

void ensure_dir(const std::string& out) {
  bem::require(!out.empty(), bem::ErrorKind::invalid_config, "--out is required");
  fs::create_directories(out);
}

std::string out_file(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

std::vector<bem::ForegroundMask> build_masks(std::span<const bem::Frame> frames,
                                             const std::vector<bem::Detection>& dets,
                                             const bem::PipelineConfig& cfg) {
  std::map<std::int64_t, std::vector<bem::Detection>> by_frame;
  for (const bem::Detection& d : dets)
    if (d.score >= cfg.mask_threshold) by_frame[d.frame_id].push_back(d);
  std::vector<bem::ForegroundMask> masks;
  masks.reserve(frames.size());
  for (const bem::Frame& f : frames) {
    const auto it = by_frame.find(f.frame_id);
    const std::span<const bem::Detection> keep =
        it == by_frame.end() ? std::span<const bem::Detection>() : std::span<const bem::Detection>(it->second);
    masks.push_back(bem::mask_from_detections(f.width, f.height, keep, cfg.mask_dilation, f.frame_id));
  }
  return masks;
}

// Every frame id that appears in any of the inputs, with similarities where
// the table has them.
std::vector<bem::FrameSimilarity> frame_table(const std::vector<bem::Detection>& dets,
                                              const std::vector<bem::GroundTruthBox>& gts,
                                              const std::vector<bem::FrameSimilarity>& sims) {
  std::set<std::int64_t> ids;
  for (const auto& d : dets) ids.insert(d.frame_id);
  for (const auto& g : gts) ids.insert(g.frame_id);
  for (const auto& s : sims) ids.insert(s.frame_id);
  std::vector<bem::FrameSimilarity> out;
  out.reserve(ids.size());
  auto it = sims.begin();
  for (std::int64_t id : ids) {
    bem::FrameSimilarity f{id, std::nullopt};
    while (it != sims.end() && it->frame_id < id) ++it;
    if (it != sims.end() && it->frame_id == id) f.similarity = it->similarity;
    out.push_back(f);
  }
  return out;
}

struct SimulateArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int run_simulate(const SimulateArgs& a) {
  bem::SimulationConfig cfg;
  if (!a.config.empty()) cfg = bem::simulation_config_from_json(load_config_text(a.config));
  if (a.seed) {
    cfg.scene.seed = *a.seed;
    cfg.detector.seed = *a.seed + 1;
  }
  cfg.scene.validate();
  cfg.detector.validate();
  ensure_dir(a.out);

  const bem::SyntheticStream stream = bem::generate_stream(cfg.scene);
  const std::vector<bem::Detection> dets = bem::synth_detect(stream.frames, stream.ground_truth, cfg.detector);
  bem::write_frame_directory(fs::path(a.out) / "frames", stream.frames);
  bem::write_ground_truth(fs::path(a.out) / "gt.jsonl", stream.ground_truth);
  bem::write_detections(fs::path(a.out) / "dets.jsonl", dets);
  bem::Frame truth = stream.true_background;
  bem::write_pnm(fs::path(a.out) / (truth.channels == 1 ? "truth_background.pgm" : "truth_background.ppm"), truth);
  bem::write_text_file(out_file(a.out, "scene.lock.json"), bem::to_json(cfg) + "\n");
  std::cout << "frames " << stream.frames.size() << ", gt " << stream.ground_truth.size() << ", detections "
            << dets.size() << "\n";
  return 0;
}

struct EstimateArgs {
  std::string config;
  std::string frames;
  std::string dets;
  std::string out;
  std::int64_t start = 0;
  std::optional<int> window;
};

int run_estimate(const EstimateArgs& a) {
  bem::PipelineConfig cfg = load_pipeline_config(a.config);
  if (a.window) cfg.window = *a.window;
  cfg.validate();
  ensure_dir(a.out);
  const std::vector<bem::Frame> frames = bem::read_frame_directory(a.frames);
  std::vector<bem::Detection> dets;
  if (!a.dets.empty()) dets = bem::read_detections(fs::path(a.dets));

  bem::require(!frames.empty(), bem::ErrorKind::data, "no frames in " + a.frames);
  const std::int64_t first = a.start - frames.front().frame_id;
  const std::size_t length = static_cast<std::size_t>(cfg.window);
  bem::require(first >= 0 && static_cast<std::size_t>(first) + length <= frames.size(), bem::ErrorKind::data,
               "window [" + std::to_string(a.start) + ", " + std::to_string(a.start + cfg.window) +
                   ") is not inside the stream");
  const auto window = std::span<const bem::Frame>(frames).subspan(static_cast<std::size_t>(first), length);
  const std::vector<bem::ForegroundMask> masks = build_masks(window, dets, cfg);
  const bem::BackgroundEstimate bg = bem::masked_temporal_average(window, masks);
  const bem::Frame image = bg.as_frame();
  bem::write_pnm(fs::path(a.out) / (image.channels == 1 ? "background.pgm" : "background.ppm"), image);
  nlohmann::ordered_json side;
  side["window_start"] = bg.window_start;
  side["window_end"] = bg.window_end;
  side["L"] = bg.window_length;
  bem::write_text_file(out_file(a.out, "background.json"), side.dump(2) + "\n");
  return 0;
}

struct SweepArgs {
  std::string config;
  std::vector<std::string> frames;
  std::vector<std::string> dets;
  std::vector<int> candidates;
  std::string out;
};

int run_sweep(const SweepArgs& a) {
  const bem::PipelineConfig cfg = load_pipeline_config(a.config);
  cfg.validate();
  bem::require(a.dets.empty() || a.dets.size() == a.frames.size(), bem::ErrorKind::invalid_config,
               "give one --dets per --frames, or none");
  bem::WindowConfig wcfg;
  if (!a.candidates.empty()) wcfg.candidate_sizes = a.candidates;
  wcfg.validate();
  ensure_dir(a.out);

  std::vector<bem::FrameSequence> sequences;
  for (std::size_t s = 0; s < a.frames.size(); ++s) {
    bem::FrameSequence seq;
    seq.frames = bem::read_frame_directory(a.frames[s]);
    std::vector<bem::Detection> dets;
    if (!a.dets.empty()) dets = bem::read_detections(fs::path(a.dets[s]));
    seq.masks = build_masks(seq.frames, dets, cfg);
    sequences.push_back(std::move(seq));
  }
  const bem::WindowSweepResult result = bem::sweep_window_size(sequences, wcfg, cfg.quality);
  std::ostringstream csv;
  csv.precision(17);
  csv << "L,mean_mae,mean_ghost_rate,mean_combined\n";
  for (const bem::WindowSweepEntry& e : result.per_size)
    csv << e.window_size << "," << e.mean_mae << "," << e.mean_ghost_rate << "," << e.mean_combined << "\n";
  bem::write_text_file(out_file(a.out, "sweep.csv"), csv.str());
  std::cout << "best L = " << result.best_window_size << "\n";
  return 0;
}

struct RescoreArgs {
  std::string config;
  std::string dets;
  std::string similarity;
  std::string out;
  std::optional<double> alpha;
  std::optional<double> gamma;
  std::optional<double> delta;
  std::string rank_mode;
  std::string calib;
  std::optional<double> temperature;
};

void apply_rescore_overrides(const RescoreArgs& a, bem::PipelineConfig& cfg) {
  if (a.alpha) cfg.rescore.alpha = *a.alpha;
  if (a.gamma) cfg.rescore.gamma = *a.gamma;
  if (a.delta) cfg.rescore.delta = *a.delta;
  if (!a.rank_mode.empty()) cfg.rescore.rank_mode = bem::parse_rank_mode(a.rank_mode);
  if (!a.calib.empty()) cfg.calibration.mode = bem::parse_calibration_mode(a.calib);
  if (a.temperature) cfg.calibration.temperature = *a.temperature;
}

int run_rescore(const RescoreArgs& a) {
  bem::PipelineConfig cfg = load_pipeline_config(a.config);
  apply_rescore_overrides(a, cfg);
  cfg.validate();
  ensure_dir(a.out);
  const std::vector<bem::Detection> dets = bem::read_detections(fs::path(a.dets));
  std::vector<bem::FrameSimilarity> sims;
  if (!a.similarity.empty()) sims = bem::parse_similarity_csv(bem::read_text_file(a.similarity));

  // Group by frame, keeping each frame's input order, then restore input order.
  std::vector<bem::RescoredDetection> out(dets.size());
  std::vector<std::size_t> order(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return dets[x].frame_id < dets[y].frame_id; });
  auto sim = sims.begin();
  for (std::size_t begin = 0; begin < order.size();) {
    const std::int64_t id = dets[order[begin]].frame_id;
    std::size_t end = begin;
    std::vector<bem::Detection> frame;
    while (end < order.size() && dets[order[end]].frame_id == id) frame.push_back(dets[order[end++]]);
    while (sim != sims.end() && sim->frame_id < id) ++sim;
    std::optional<double> c;
    if (sim != sims.end() && sim->frame_id == id) c = sim->similarity;
    std::vector<bem::RescoredDetection> r = bem::rescore(frame, c, cfg.rescore, cfg.calibration);
    for (std::size_t k = 0; k < r.size(); ++k) out[order[begin + k]] = std::move(r[k]);
    begin = end;
  }
  bem::write_rescored(fs::path(a.out) / "rescored.jsonl", out);
  return 0;
}

struct EvalArgs {
  std::string config;
  std::string dets;
  std::string baseline;
  std::string gt;
  std::string similarity;
  std::string out;
};

int run_eval(const EvalArgs& a) {
  const bem::PipelineConfig cfg = load_pipeline_config(a.config);
  cfg.validate();
  ensure_dir(a.out);
  const std::vector<bem::Detection> dets = bem::read_detections(fs::path(a.dets));
  const std::vector<bem::GroundTruthBox> gts = bem::read_ground_truth(fs::path(a.gt));
  std::vector<bem::FrameSimilarity> sims;
  if (!a.similarity.empty()) sims = bem::parse_similarity_csv(bem::read_text_file(a.similarity));
  std::vector<bem::Detection> base;
  if (!a.baseline.empty()) base = bem::read_detections(fs::path(a.baseline));

  std::vector<bem::Detection> all = dets;
  all.insert(all.end(), base.begin(), base.end());
  const std::vector<bem::FrameSimilarity> frames = frame_table(all, gts, sims);
  const bem::EvalReport report = bem::evaluate(dets, gts, frames, cfg.pauc);
  std::vector<bem::SimilarityBin> bins;
  if (!a.baseline.empty() && !sims.empty()) {
    const bem::EvalReport base_report = bem::evaluate(base, gts, frames, cfg.pauc);
    bins = bem::binned_delta_pauc(base_report, report, cfg.similarity_bins);
  }
  bem::write_text_file(out_file(a.out, "report.json"), bem::to_json(report) + "\n");
  bem::write_text_file(out_file(a.out, "curve.csv"), bem::curve_csv(report.curve));
  bem::write_text_file(out_file(a.out, "bins.csv"), bem::bins_csv(bins));
  std::cout << "map50 " << report.map50 << ", p_auc " << report.p_auc << "\n";
  return 0;
}

struct PipelineArgs {
  RescoreArgs rescore;
  std::string frames;
  std::string gt;
  std::string extractor;
  std::optional<int> window;
  std::optional<int> memory;
  bool no_memory = false;
};

int run_pipeline_cmd(const PipelineArgs& a) {
  bem::PipelineConfig cfg = load_pipeline_config(a.rescore.config);
  apply_rescore_overrides(a.rescore, cfg);
  if (!a.frames.empty()) cfg.frames_dir = a.frames;
  if (!a.rescore.dets.empty()) cfg.detections_path = a.rescore.dets;
  if (!a.gt.empty()) cfg.ground_truth_path = a.gt;
  if (!a.rescore.out.empty()) cfg.output_dir = a.rescore.out;
  if (!a.extractor.empty()) cfg.extractor = bem::ExtractorSpec::parse(a.extractor);
  if (a.window) cfg.window = *a.window;
  if (a.memory) cfg.memory = *a.memory;
  if (a.no_memory) cfg.memory_enabled = false;
  const bem::PipelineResult result = bem::run_pipeline_files(cfg);
  std::cout << "frames " << result.frames.size() << ", detections " << result.detections.size()
            << ", prototype updates " << result.prototype_updates
            << (result.cold_start_only ? " (cold-start only)" : "") << "\n";
  return 0;
}

struct BenchArgs {
  std::string config;
  std::string scene;
  std::string out;
  std::optional<std::uint64_t> seed;
  int repetitions = 5;
};

nlohmann::ordered_json stage_json(const bem::StageStats& s) {
  return {{"median_ns", s.median_ns}, {"p95_ns", s.p95_ns}};
}

int run_bench(const BenchArgs& a) {
  const bem::PipelineConfig cfg = load_pipeline_config(a.config);
  bem::SimulationConfig sim;
  if (!a.scene.empty()) sim = bem::simulation_config_from_json(load_config_text(a.scene));
  if (a.seed) {
    sim.scene.seed = *a.seed;
    sim.detector.seed = *a.seed + 1;
  }
  const bem::SyntheticStream stream = bem::generate_stream(sim.scene);
  const std::vector<bem::Detection> dets = bem::synth_detect(stream.frames, stream.ground_truth, sim.detector);
  const bem::OverheadReport r = bem::measure_overhead(stream.frames, dets, cfg, a.repetitions);

  nlohmann::ordered_json j;
  j["frames"] = stream.frames.size();
  j["detections"] = dets.size();
  j["repetitions"] = a.repetitions;
  j["samples"] = r.samples;
  j["background_update"] = stage_json(r.background_update);
  j["embedding"] = stage_json(r.embedding);
  j["rescore"] = stage_json(r.rescore);
  j["total"] = stage_json(r.total);
  if (!a.out.empty()) {
    ensure_dir(a.out);
    bem::write_text_file(out_file(a.out, "overhead.json"), j.dump(2) + "\n");
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Background embedding memory: false-positive re-scoring for fixed-camera detection"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic stream with ground truth and detections");
  simulate->add_option("--config", sim.config, "Simulation config JSON");
  simulate->add_option("--out", sim.out, "Output directory")->required();
  simulate->add_option("--seed", sim.seed, "Overrides scene seed (detector uses seed+1)");

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate-bg", "Masked temporal average over one window");
  estimate->add_option("--config", est.config, "Pipeline config JSON");
  estimate->add_option("--frames", est.frames, "Frame directory")->required();
  estimate->add_option("--dets", est.dets, "Detections JSONL used for masks");
  estimate->add_option("--start", est.start, "First frame id of the window");
  estimate->add_option("--window", est.window, "Window length L");
  estimate->add_option("--out", est.out, "Output directory")->required();

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep-window", "Score candidate window sizes by background quality");
  sweep->add_option("--config", sw.config, "Pipeline config JSON");
  sweep->add_option("--frames", sw.frames, "Frame directory (repeatable)")->required();
  sweep->add_option("--dets", sw.dets, "Detections JSONL per frame directory (repeatable)");
  sweep->add_option("--candidates", sw.candidates, "Candidate window sizes")->delimiter(',');
  sweep->add_option("--out", sw.out, "Output directory")->required();

  RescoreArgs rs;
  auto* rescore = app.add_subcommand("rescore", "Re-score detections given per-frame similarities");
  auto add_rescore_flags = [](CLI::App* cmd, RescoreArgs& r) {
    cmd->add_option("--config", r.config, "Pipeline config JSON");
    cmd->add_option("--alpha", r.alpha, "Penalty strength");
    cmd->add_option("--gamma", r.gamma, "Penalty temperature");
    cmd->add_option("--delta", r.delta, "Similarity floor");
    cmd->add_option("--rank-mode", r.rank_mode, "intent | literal");
    cmd->add_option("--calib", r.calib, "none | clip | temperature");
    cmd->add_option("--temperature", r.temperature, "Calibration temperature");
  };
  add_rescore_flags(rescore, rs);
  rescore->add_option("--dets", rs.dets, "Detections JSONL")->required();
  rescore->add_option("--similarity", rs.similarity, "CSV frame_id,similarity");
  rescore->add_option("--out", rs.out, "Output directory")->required();

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "mAP@0.50, P-AUC and per-frame metrics");
  eval->add_option("--config", ev.config, "Pipeline config JSON (pauc section)");
  eval->add_option("--dets", ev.dets, "Detections JSONL to evaluate")->required();
  eval->add_option("--gt", ev.gt, "Ground-truth JSONL")->required();
  eval->add_option("--baseline", ev.baseline, "Baseline detections JSONL for similarity bins");
  eval->add_option("--similarity", ev.similarity, "CSV frame_id,similarity");
  eval->add_option("--out", ev.out, "Output directory")->required();

  PipelineArgs pl;
  auto* pipeline = app.add_subcommand("pipeline", "Run the causal stream pipeline end to end");
  add_rescore_flags(pipeline, pl.rescore);
  pipeline->add_option("--frames", pl.frames, "Frame directory");
  pipeline->add_option("--dets", pl.rescore.dets, "Detections JSONL");
  pipeline->add_option("--gt", pl.gt, "Ground-truth JSONL (enables evaluation)");
  pipeline->add_option("--out", pl.rescore.out, "Output directory");
  pipeline->add_option("--extractor", pl.extractor, "grid:G=8 | file:<path>");
  pipeline->add_option("--window", pl.window, "Window length L");
  pipeline->add_option("--memory", pl.memory, "Prototype memory size K");
  pipeline->add_flag("--no-memory", pl.no_memory, "Disable the memory stage (passthrough)");

  BenchArgs bn;
  auto* bench = app.add_subcommand("bench", "Per-frame overhead of the pipeline stages on a simulated stream");
  bench->add_option("--config", bn.config, "Pipeline config JSON");
  bench->add_option("--scene", bn.scene, "Simulation config JSON");
  bench->add_option("--seed", bn.seed, "Overrides scene seed");
  bench->add_option("--repetitions", bn.repetitions, "Repetitions (>= 3)");
  bench->add_option("--out", bn.out, "Output directory for overhead.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*estimate) return run_estimate(est);
    if (*sweep) return run_sweep(sw);
    if (*rescore) return run_rescore(rs);
    if (*eval) return run_eval(ev);
    if (*pipeline) return run_pipeline_cmd(pl);
    if (*bench) return run_bench(bn);
  } catch (const bem::Error& e) {
    std::cerr << "bem: " << e.what() << "\n";
    const bool config = e.kind() == bem::ErrorKind::invalid_config || e.kind() == bem::ErrorKind::invalid_argument;
    return config ? kExitConfig : kExitData;
  } catch (const std::exception& e) {
    std::cerr << "bem: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
