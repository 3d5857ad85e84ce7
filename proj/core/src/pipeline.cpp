#include "bem/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>

#include "bem/config.hpp"
#include "bem/detection_io.hpp"
#include "bem/embedding_io.hpp"
#include "bem/error.hpp"
#include "bem/image_io.hpp"
#include "json_util.hpp"

namespace bem {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t elapsed_ns(Clock::time_point since) {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - since).count());
}

struct FrameTiming {
  std::uint64_t mask_ns = 0;
  std::uint64_t embedding_ns = 0;
  std::uint64_t rescore_ns = 0;
  /// Window build (average + background embedding + memory update), charged
  /// to the frame that closes the window.
  std::uint64_t window_ns = 0;
  bool scored = false;
};

// Frame and background embeddings, from the image extractor or from a
// precomputed per-frame table.
class EmbeddingSource {
 public:
  EmbeddingSource(const PipelineConfig& cfg, int channels, const std::vector<Embedding>* external)
      : external_(external) {
    if (external_ == nullptr) {
      require(cfg.extractor.kind == ExtractorSpec::Kind::grid, ErrorKind::invalid_config,
              "extractor " + cfg.extractor.to_string() + " needs precomputed embeddings");
      extractor_ = std::make_unique<GridStatsExtractor>(cfg.extractor.grid, channels);
    }
  }

  Embedding frame(const Frame& image, std::size_t index) const {
    if (external_ != nullptr) return (*external_)[index];
    return extract_embedding(image, *extractor_);
  }

  Embedding background(const BackgroundEstimate& bg, std::size_t first, std::size_t count) const {
    if (external_ == nullptr) return extract_embedding(bg.as_frame(), *extractor_);
    const std::size_t dim = (*external_)[first].dim();
    std::vector<double> mean(dim, 0.0);
    for (std::size_t i = first; i < first + count; ++i)
      for (std::size_t d = 0; d < dim; ++d) mean[d] += (*external_)[i][d];
    return Embedding::normalized(mean);
  }

 private:
  const std::vector<Embedding>* external_;
  std::unique_ptr<GridStatsExtractor> extractor_;
};

void check_stream(std::span<const Frame> frames) {
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Frame& f = frames[i];
    if (i > 0) {
      require(f.frame_id == frames[i - 1].frame_id + 1, ErrorKind::data,
              "frame id gap: missing frame " + std::to_string(frames[i - 1].frame_id + 1));
      require(f.width == frames[0].width && f.height == frames[0].height &&
                  f.channels == frames[0].channels,
              ErrorKind::data, "frame " + std::to_string(f.frame_id) + " changes dimensions mid-stream");
    }
    require(f.pixels.size() == f.pixel_count() * static_cast<std::size_t>(f.channels) && f.width > 0 &&
                f.height > 0,
            ErrorKind::data, "frame " + std::to_string(f.frame_id) + " is malformed");
  }
}

PipelineResult run_stream(std::span<const Frame> frames, std::span<const Detection> detections,
                          const PipelineConfig& cfg, const std::vector<Embedding>* external,
                          std::vector<FrameTiming>* timing) {
  cfg.validate();
  check_stream(frames);
  PipelineResult result;
  result.detections.resize(detections.size());
  if (frames.empty()) {
    require(detections.empty(), ErrorKind::data, "detections given for an empty frame stream");
    return result;
  }
  if (external != nullptr) {
    require(external->size() == frames.size(), ErrorKind::data,
            "embedding file has " + std::to_string(external->size()) + " rows for " +
                std::to_string(frames.size()) + " frames");
  }

  const std::int64_t first_id = frames.front().frame_id;
  std::vector<std::vector<std::size_t>> by_frame(frames.size());
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const std::int64_t offset = detections[i].frame_id - first_id;
    require(offset >= 0 && offset < static_cast<std::int64_t>(frames.size()), ErrorKind::data,
            "detection references frame " + std::to_string(detections[i].frame_id) +
                " outside the stream");
    by_frame[static_cast<std::size_t>(offset)].push_back(i);
  }

  const EmbeddingSource source(cfg, frames.front().channels, external);
  PrototypeMemory memory(static_cast<std::size_t>(cfg.memory_capacity()));
  const std::size_t window = static_cast<std::size_t>(cfg.window);
  std::vector<ForegroundMask> masks;
  masks.reserve(window);
  if (timing != nullptr) timing->assign(frames.size(), FrameTiming{});

  std::vector<Detection> frame_dets;
  std::vector<Detection> mask_dets;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const Frame& frame = frames[t];
    frame_dets.clear();
    mask_dets.clear();
    for (std::size_t i : by_frame[t]) {
      frame_dets.push_back(detections[i]);
      if (detections[i].score >= cfg.mask_threshold) mask_dets.push_back(detections[i]);
    }

    std::optional<double> similarity;
    auto start = Clock::now();
    if (cfg.memory_enabled && memory.prototype()) {
      similarity = memory.query(source.frame(frame, t));
      const std::uint64_t ns = elapsed_ns(start);
      result.timings.embedding_ns += ns;
      if (timing != nullptr) (*timing)[t].embedding_ns = ns;
    }

    start = Clock::now();
    std::vector<RescoredDetection> rescored =
        rescore(frame_dets, similarity, cfg.rescore, cfg.calibration);
    for (std::size_t k = 0; k < rescored.size(); ++k)
      result.detections[by_frame[t][k]] = std::move(rescored[k]);
    std::uint64_t ns = elapsed_ns(start);
    result.timings.rescore_ns += ns;
    if (timing != nullptr) {
      (*timing)[t].rescore_ns = ns;
      (*timing)[t].scored = similarity.has_value();
    }
    result.frames.push_back({frame.frame_id, similarity});
    if (similarity) result.cold_start_only = false;

    start = Clock::now();
    masks.push_back(mask_from_detections(frame.width, frame.height, mask_dets, cfg.mask_dilation,
                                         frame.frame_id));
    ns = elapsed_ns(start);
    result.timings.mask_ns += ns;
    if (timing != nullptr) (*timing)[t].mask_ns = ns;

    if (masks.size() == window) {
      start = Clock::now();
      const std::size_t first = t + 1 - window;
      BackgroundEstimate bg = masked_temporal_average(frames.subspan(first, window), masks);
      if (cfg.memory_enabled) {
        memory.update(source.background(bg, first, window));
        ++result.prototype_updates;
      }
      ns = elapsed_ns(start);
      result.timings.background_ns += ns;
      if (timing != nullptr) (*timing)[t].window_ns = ns;
      result.last_background = std::move(bg);
      masks.clear();
    }
  }
  result.timings.frames = frames.size();
  return result;
}

StageStats stats_of(std::vector<double> samples) {
  StageStats s;
  if (samples.empty()) return s;
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  s.median_ns = n % 2 == 1 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
  const std::size_t p95 = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n))) - 1;
  s.p95_ns = samples[std::min(p95, n - 1)];
  return s;
}

}  // namespace

void PipelineConfig::validate() const {
  require(window >= 1, ErrorKind::invalid_config, "window must be >= 1");
  require(memory >= 0, ErrorKind::invalid_config, "memory must be >= 0 (0 ties it to window)");
  require(mask_threshold >= 0.0 && mask_threshold <= 1.0, ErrorKind::invalid_config,
          "mask_threshold must lie in [0,1]");
  require(mask_dilation >= 0, ErrorKind::invalid_config, "mask_dilation must be >= 0");
  require(similarity_bins >= 1, ErrorKind::invalid_config, "similarity_bins must be >= 1");
  rescore.validate();
  calibration.validate();
  quality.validate();
  try {
    pauc.validate();
  } catch (const Error& e) {
    fail(ErrorKind::invalid_config, e.what());
  }
}

PipelineResult run_pipeline(std::span<const Frame> frames, std::span<const Detection> detections,
                            const PipelineConfig& cfg, const std::vector<Embedding>* external) {
  return run_stream(frames, detections, cfg, external, nullptr);
}

PipelineEvaluation evaluate_pipeline(const PipelineResult& result,
                                     std::span<const GroundTruthBox> gts,
                                     const PipelineConfig& cfg) {
  std::vector<Detection> base;
  std::vector<Detection> rescored;
  base.reserve(result.detections.size());
  rescored.reserve(result.detections.size());
  for (const RescoredDetection& r : result.detections) {
    rescored.push_back(r.detection);
    base.push_back(r.detection);
    base.back().score = r.score_calibrated;
  }
  PipelineEvaluation eval;
  eval.baseline = evaluate(base, gts, result.frames, cfg.pauc);
  eval.bem = evaluate(rescored, gts, result.frames, cfg.pauc);
  try {
    eval.correlations = similarity_correlations(eval.baseline.frames);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::undefined_metric) throw;
  }
  if (!result.cold_start_only)
    eval.bins = binned_delta_pauc(eval.baseline, eval.bem, cfg.similarity_bins);
  return eval;
}

std::string pipeline_report_json(const PipelineResult& result, const PipelineEvaluation* eval) {
  nlohmann::ordered_json j;
  j["cold_start_only"] = result.cold_start_only;
  j["frames"] = result.frames.size();
  j["detections"] = result.detections.size();
  j["prototype_updates"] = result.prototype_updates;
  if (eval != nullptr) {
    const nlohmann::ordered_json base = detail::report_json(eval->baseline);
    j["baseline"] = {{"map50", base["map50"]},
                     {"p_auc", base["p_auc"]},
                     {"p_auc_frame_mean", base["p_auc_frame_mean"]},
                     {"true_positives", base["true_positives"]},
                     {"false_positives", base["false_positives"]}};
    j["bem"] = detail::report_json(eval->bem);
    if (eval->correlations) {
      j["correlations"] = {{"rho_count", eval->correlations->rho_count},
                           {"rho_pauc", eval->correlations->rho_pauc}};
    } else {
      j["correlations"] = nullptr;
    }
    nlohmann::ordered_json bins = nlohmann::ordered_json::array();
    for (const SimilarityBin& b : eval->bins)
      bins.push_back({{"c_lo", b.c_lo},
                      {"c_hi", b.c_hi},
                      {"n_frames", b.frames},
                      {"delta_pauc", b.delta_pauc ? nlohmann::ordered_json(*b.delta_pauc)
                                                  : nlohmann::ordered_json()}});
    j["bins"] = std::move(bins);
  }
  return j.dump(2);
}

PipelineResult run_pipeline_files(const PipelineConfig& cfg) {
  cfg.validate();
  require(!cfg.frames_dir.empty(), ErrorKind::invalid_config, "frames directory is not set");
  require(!cfg.detections_path.empty(), ErrorKind::invalid_config, "detections path is not set");
  require(!cfg.output_dir.empty(), ErrorKind::invalid_config, "output directory is not set");
  require(std::filesystem::is_directory(cfg.frames_dir), ErrorKind::invalid_config,
          "frames directory " + cfg.frames_dir + " does not exist");
  require(std::filesystem::is_regular_file(cfg.detections_path), ErrorKind::invalid_config,
          "detections file " + cfg.detections_path + " does not exist");
  require(cfg.ground_truth_path.empty() || std::filesystem::is_regular_file(cfg.ground_truth_path),
          ErrorKind::invalid_config, "ground-truth file " + cfg.ground_truth_path + " does not exist");

  const std::vector<Frame> frames = read_frame_directory(cfg.frames_dir);
  const std::vector<Detection> dets = read_detections(std::filesystem::path(cfg.detections_path));
  std::vector<Embedding> table;
  if (cfg.extractor.kind == ExtractorSpec::Kind::file)
    table = read_embeddings(std::filesystem::path(cfg.extractor.path));
  PipelineResult result =
      run_pipeline(frames, dets, cfg, cfg.extractor.kind == ExtractorSpec::Kind::file ? &table : nullptr);

  const std::filesystem::path out(cfg.output_dir);
  std::filesystem::create_directories(out);
  write_rescored(out / "rescored.jsonl", result.detections);
  write_text_file((out / "run.lock.json").string(), to_json(cfg) + "\n");
  nlohmann::ordered_json timing;
  timing["frames"] = result.timings.frames;
  timing["mask_ns"] = result.timings.mask_ns;
  timing["background_ns"] = result.timings.background_ns;
  timing["embedding_ns"] = result.timings.embedding_ns;
  timing["rescore_ns"] = result.timings.rescore_ns;
  write_text_file((out / "timing.json").string(), timing.dump(2) + "\n");
  write_text_file((out / "similarity.csv").string(), similarity_csv(result.frames));

  if (!cfg.ground_truth_path.empty()) {
    const std::vector<GroundTruthBox> gts = read_ground_truth(std::filesystem::path(cfg.ground_truth_path));
    const PipelineEvaluation eval = evaluate_pipeline(result, gts, cfg);
    write_text_file((out / "report.json").string(), pipeline_report_json(result, &eval) + "\n");
    write_text_file((out / "curve.csv").string(), curve_csv(eval.bem.curve));
    write_text_file((out / "bins.csv").string(), bins_csv(eval.bins));
  } else {
    write_text_file((out / "report.json").string(), pipeline_report_json(result, nullptr) + "\n");
  }
  return result;
}

OverheadReport measure_overhead(std::span<const Frame> frames, std::span<const Detection> detections,
                                const PipelineConfig& cfg, int repetitions) {
  require(repetitions >= 3, ErrorKind::invalid_argument, "measure_overhead needs >= 3 repetitions");
  require(!frames.empty(), ErrorKind::invalid_argument, "measure_overhead needs frames");
  const std::size_t window = static_cast<std::size_t>(cfg.window);
  std::vector<double> bg;
  std::vector<double> emb;
  std::vector<double> res;
  std::vector<double> total;
  std::vector<FrameTiming> timing;
  for (int rep = 0; rep < repetitions; ++rep) {
    run_stream(frames, detections, cfg, nullptr, &timing);
    const bool any_scored = std::any_of(timing.begin(), timing.end(), [](const FrameTiming& f) { return f.scored; });
    for (std::size_t start = 0; start < timing.size(); start += window) {
      const std::size_t end = std::min(timing.size(), start + window);
      double window_cost = 0.0;
      for (std::size_t t = start; t < end; ++t)
        window_cost += static_cast<double>(timing[t].mask_ns + timing[t].window_ns);
      const double per_frame_bg = window_cost / static_cast<double>(end - start);
      for (std::size_t t = start; t < end; ++t) {
        // Cold-start frames skip embedding and rescoring; leave them out
        // unless nothing was ever scored.
        if (any_scored && !timing[t].scored) continue;
        const double e = static_cast<double>(timing[t].embedding_ns);
        const double r = static_cast<double>(timing[t].rescore_ns);
        bg.push_back(per_frame_bg);
        emb.push_back(e);
        res.push_back(r);
        total.push_back(per_frame_bg + e + r);
      }
    }
  }
  OverheadReport report;
  report.background_update = stats_of(bg);
  report.embedding = stats_of(emb);
  report.rescore = stats_of(res);
  report.total = stats_of(total);
  report.samples = total.size();
  return report;
}

}  // namespace bem
