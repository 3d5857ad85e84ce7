#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "bem/background.hpp"
#include "bem/embedding.hpp"
#include "bem/metrics.hpp"
#include "bem/rescore.hpp"
#include "bem/simulator.hpp"

namespace {

using namespace bem;

std::vector<Frame> noise_frames(int n, int w, int h, int ch) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<Frame> out;
  for (int t = 0; t < n; ++t) {
    Frame f = Frame::filled(t, w, h, ch, 0.0f);
    for (float& v : f.pixels) v = u(rng);
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<Detection> random_dets(std::size_t n, int frames, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Detection> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = u(rng) * 300.0;
    const double y = u(rng) * 220.0;
    out.push_back({static_cast<std::int64_t>(i % static_cast<std::size_t>(frames)),
                   {x, y, x + 8.0 + 12.0 * u(rng), y + 8.0 + 12.0 * u(rng)},
                   u(rng),
                   std::nullopt});
  }
  return out;
}

void BM_MaskedTemporalAverage(benchmark::State& state) {
  const int window = static_cast<int>(state.range(0));
  const std::vector<Frame> frames = noise_frames(window, 320, 240, 3);
  const std::vector<Detection> dets = random_dets(static_cast<std::size_t>(window) * 10, window, 2);
  std::vector<ForegroundMask> masks;
  for (int t = 0; t < window; ++t) {
    std::vector<Detection> fd;
    for (const Detection& d : dets)
      if (d.frame_id == t) fd.push_back(d);
    masks.push_back(mask_from_detections(320, 240, fd, 2, t));
  }
  for (auto _ : state) benchmark::DoNotOptimize(masked_temporal_average(frames, masks));
  state.SetItemsProcessed(state.iterations() * window);
}
BENCHMARK(BM_MaskedTemporalAverage)->Arg(5)->Arg(25)->Unit(benchmark::kMillisecond);

void BM_MaskFromDetections(benchmark::State& state) {
  const std::vector<Detection> dets = random_dets(static_cast<std::size_t>(state.range(0)), 1, 3);
  for (auto _ : state) benchmark::DoNotOptimize(mask_from_detections(320, 240, dets, 2));
}
BENCHMARK(BM_MaskFromDetections)->Arg(10)->Arg(100);

void BM_GridStatsEmbedding(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const Frame f = noise_frames(1, size, size * 3 / 4, 3).front();
  const GridStatsExtractor ex(8, 3);
  for (auto _ : state) benchmark::DoNotOptimize(extract_embedding(f, ex));
}
BENCHMARK(BM_GridStatsEmbedding)->Arg(320)->Arg(640);

void BM_PrototypeQuery(benchmark::State& state) {
  const std::vector<Frame> frames = noise_frames(2, 64, 48, 3);
  const GridStatsExtractor ex(8, 3);
  PrototypeMemory mem(25);
  for (int k = 0; k < 25; ++k) mem.update(extract_embedding(frames[0], ex));
  const Embedding q = extract_embedding(frames[1], ex);
  for (auto _ : state) benchmark::DoNotOptimize(mem.query(q));
}
BENCHMARK(BM_PrototypeQuery);

void BM_Rescore(benchmark::State& state) {
  const std::vector<Detection> dets = random_dets(static_cast<std::size_t>(state.range(0)), 1, 4);
  RescoreConfig rc;
  rc.alpha = 0.1;
  rc.gamma = 0.5;
  const CalibrationConfig cc;
  for (auto _ : state) benchmark::DoNotOptimize(rescore(dets, 0.7, rc, cc));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Rescore)->RangeMultiplier(2)->Range(100, 1600)->Complexity(benchmark::oNLogN);

void BM_PAuc(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const std::vector<Detection> dets = random_dets(n, 50, 5);
  std::vector<GroundTruthBox> gts;
  for (std::size_t i = 0; i < n; i += 2) gts.push_back({dets[i].frame_id, dets[i].box, 0});
  const PAucConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(p_auc(dets, gts, cfg));
}
BENCHMARK(BM_PAuc)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Evaluate(benchmark::State& state) {
  SceneConfig sc;
  sc.frame_count = 200;
  sc.schedule.count = 8;
  const SyntheticStream st = generate_stream(sc);
  const std::vector<Detection> dets = synth_detect(st.frames, st.ground_truth, SynthDetectorConfig{});
  std::vector<FrameSimilarity> frames;
  for (const Frame& f : st.frames) frames.push_back({f.frame_id, 0.5});
  const PAucConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(dets, st.ground_truth, frames, cfg));
}
BENCHMARK(BM_Evaluate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
