#include "bem/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <tuple>

#include "bem/error.hpp"
#include "bem/parallel.hpp"
#include "json_util.hpp"

namespace bem {

namespace {

// Descending score, then frame, box and label.
std::vector<std::size_t> score_order(std::span<const Detection> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Detection& x = dets[a];
    const Detection& y = dets[b];
    if (x.score != y.score) return x.score > y.score;
    return std::make_tuple(x.frame_id, x.box.x1, x.box.y1, x.box.x2, x.box.y2, x.label.value_or(-1)) <
           std::make_tuple(y.frame_id, y.box.x1, y.box.y1, y.box.x2, y.box.y2, y.label.value_or(-1));
  });
  return order;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double single_class_ap(std::span<const Detection> dets, std::span<const GroundTruthBox> gts) {
  const MatchResult match = match_detections(dets, gts);
  const std::vector<std::size_t> order = score_order(dets);
  const double n_gt = static_cast<double>(gts.size());
  std::vector<double> precision;
  std::vector<double> recall;
  precision.reserve(order.size());
  recall.reserve(order.size());
  std::size_t tp = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    tp += match.true_positive[order[k]] ? 1 : 0;
    precision.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
    recall.push_back(static_cast<double>(tp) / n_gt);
  }
  // Precision envelope: best precision at this recall or beyond.
  for (std::size_t k = precision.size(); k-- > 1;)
    precision[k - 1] = std::max(precision[k - 1], precision[k]);
  double sum = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double r = static_cast<double>(k) / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it == recall.end()) continue;
    sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / 101.0;
}

}  // namespace

double iou(const Box& a, const Box& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::size_t MatchResult::tp_count() const {
  return static_cast<std::size_t>(std::count(true_positive.begin(), true_positive.end(), true));
}

MatchResult match_detections(std::span<const Detection> dets, std::span<const GroundTruthBox> gts,
                             double iou_threshold) {
  std::map<std::int64_t, std::vector<std::size_t>> gt_by_frame;
  for (std::size_t g = 0; g < gts.size(); ++g) gt_by_frame[gts[g].frame_id].push_back(g);

  MatchResult result;
  result.true_positive.assign(dets.size(), false);
  result.matched_gt.assign(dets.size(), -1);
  std::vector<bool> taken(gts.size(), false);
  for (std::size_t i : score_order(dets)) {
    const Detection& det = dets[i];
    const auto it = gt_by_frame.find(det.frame_id);
    if (it == gt_by_frame.end()) continue;
    double best = iou_threshold;
    int best_g = -1;
    for (std::size_t g : it->second) {
      if (taken[g]) continue;
      if (det.label && *det.label != gts[g].label) continue;
      const double v = iou(det.box, gts[g].box);
      if (v >= best && (best_g < 0 || v > best)) {
        best = v;
        best_g = static_cast<int>(g);
      }
    }
    if (best_g >= 0) {
      taken[static_cast<std::size_t>(best_g)] = true;
      result.true_positive[i] = true;
      result.matched_gt[i] = best_g;
    }
  }
  return result;
}

double average_precision_50(std::span<const Detection> dets, std::span<const GroundTruthBox> gts) {
  require(!gts.empty(), ErrorKind::undefined_metric, "AP@0.50 is undefined without ground truth");
  std::set<int> labels;
  for (const GroundTruthBox& g : gts) labels.insert(g.label);
  const bool labelled = std::any_of(dets.begin(), dets.end(), [&](const Detection& d) {
    return d.label && *d.label != *labels.begin();
  });
  if (labels.size() == 1 && !labelled) return single_class_ap(dets, gts);

  double sum = 0.0;
  for (int label : labels) {
    std::vector<Detection> d;
    std::vector<GroundTruthBox> g;
    for (const Detection& det : dets)
      if (!det.label || *det.label == label) d.push_back(det);
    for (const GroundTruthBox& gt : gts)
      if (gt.label == label) g.push_back(gt);
    sum += single_class_ap(d, g);
  }
  return sum / static_cast<double>(labels.size());
}

void PAucConfig::validate() const {
  require(points >= 2, ErrorKind::invalid_argument, "P-AUC grid needs at least 2 points");
  require(empty_precision >= 0.0 && empty_precision <= 1.0, ErrorKind::invalid_argument,
          "empty_precision must lie in [0,1]");
}

std::vector<double> threshold_grid(std::span<const double> scores, const PAucConfig& cfg) {
  cfg.validate();
  const int j_last = cfg.points - 1;
  std::vector<double> grid;
  if (cfg.grid == PAucConfig::Grid::uniform) {
    grid.reserve(static_cast<std::size_t>(cfg.points));
    for (int j = 0; j <= j_last; ++j)
      grid.push_back(1.0 - static_cast<double>(j) / static_cast<double>(j_last));
    return grid;
  }
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  grid.push_back(1.0);
  if (!sorted.empty()) {
    const double last = static_cast<double>(sorted.size() - 1);
    for (int j = 1; j < j_last; ++j) {
      const double q = 1.0 - static_cast<double>(j) / static_cast<double>(j_last);
      const double pos = q * last;
      const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
      const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
      const double frac = pos - static_cast<double>(lo);
      grid.push_back(std::clamp(sorted[lo] + frac * (sorted[hi] - sorted[lo]), 0.0, 1.0));
    }
  }
  grid.push_back(0.0);
  std::sort(grid.begin(), grid.end(), std::greater<>());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

PAucResult p_auc_from_flags(std::span<const double> scores, const std::vector<bool>& true_positive,
                            const PAucConfig& cfg) {
  require(scores.size() == true_positive.size(), ErrorKind::invalid_argument,
          "score and flag counts differ");
  const std::vector<double> grid = threshold_grid(scores, cfg);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  PAucResult result;
  result.curve.reserve(grid.size());
  std::size_t next = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (double tau : grid) {
    while (next < order.size() && scores[order[next]] >= tau) {
      (true_positive[order[next]] ? tp : fp) += 1;
      ++next;
    }
    const std::size_t n = tp + fp;
    const double precision =
        n == 0 ? cfg.empty_precision : static_cast<double>(tp) / static_cast<double>(n);
    result.curve.push_back({tau, precision, tp, fp});
  }
  for (std::size_t j = 0; j + 1 < result.curve.size(); ++j)
    result.value += result.curve[j].precision * (result.curve[j].tau - result.curve[j + 1].tau);
  return result;
}

PAucResult p_auc(std::span<const Detection> dets, std::span<const GroundTruthBox> gts,
                 const PAucConfig& cfg) {
  const MatchResult match = match_detections(dets, gts);
  std::vector<double> scores;
  scores.reserve(dets.size());
  for (const Detection& d : dets) scores.push_back(d.score);
  return p_auc_from_flags(scores, match.true_positive, cfg);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), ErrorKind::invalid_argument, "correlation series differ in length");
  require(x.size() >= 3, ErrorKind::undefined_metric, "correlation needs at least 3 samples");
  auto average_ranks = [](std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
      std::size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
      i = j + 1;
    }
    return ranks;
  };
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  require(sxx > 0.0 && syy > 0.0, ErrorKind::undefined_metric,
          "correlation is undefined for a constant series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

SimilarityCorrelations similarity_correlations(std::span<const FrameMetrics> frames) {
  std::vector<double> c;
  std::vector<double> count;
  std::vector<double> pauc;
  for (const FrameMetrics& f : frames) {
    if (!f.similarity) continue;
    c.push_back(*f.similarity);
    count.push_back(static_cast<double>(f.object_count));
    pauc.push_back(f.p_auc);
  }
  SimilarityCorrelations out;
  out.rho_count = spearman(c, count);
  out.rho_pauc = spearman(c, pauc);
  return out;
}

EvalReport evaluate(std::span<const Detection> dets, std::span<const GroundTruthBox> gts,
                    std::span<const FrameSimilarity> frames, const PAucConfig& cfg) {
  cfg.validate();
  std::map<std::int64_t, std::size_t> frame_index;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    require(frame_index.emplace(frames[i].frame_id, i).second, ErrorKind::invalid_argument,
            "frame " + std::to_string(frames[i].frame_id) + " listed twice");
  }
  std::vector<std::vector<std::size_t>> det_of(frames.size());
  std::vector<std::size_t> gt_count(frames.size(), 0);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const auto it = frame_index.find(dets[i].frame_id);
    require(it != frame_index.end(), ErrorKind::data,
            "detection references unknown frame " + std::to_string(dets[i].frame_id));
    det_of[it->second].push_back(i);
  }
  for (const GroundTruthBox& g : gts) {
    const auto it = frame_index.find(g.frame_id);
    require(it != frame_index.end(), ErrorKind::data,
            "ground truth references unknown frame " + std::to_string(g.frame_id));
    ++gt_count[it->second];
  }

  EvalReport report;
  report.detections = dets.size();
  report.ground_truth = gts.size();
  report.map50 = average_precision_50(dets, gts);

  // Matching never crosses frames, so corpus flags also serve per frame.
  const MatchResult match = match_detections(dets, gts);
  report.true_positives = match.tp_count();
  report.false_positives = dets.size() - report.true_positives;
  std::vector<double> scores;
  scores.reserve(dets.size());
  for (const Detection& d : dets) scores.push_back(d.score);
  PAucResult corpus = p_auc_from_flags(scores, match.true_positive, cfg);
  report.p_auc = corpus.value;
  report.curve = std::move(corpus.curve);

  report.frames.resize(frames.size());
  parallel_for(frames.size(), [&](std::size_t f) {
    std::vector<double> s;
    std::vector<bool> t;
    for (std::size_t i : det_of[f]) {
      s.push_back(scores[i]);
      t.push_back(match.true_positive[i]);
    }
    FrameMetrics& m = report.frames[f];
    m.frame_id = frames[f].frame_id;
    m.similarity = frames[f].similarity;
    m.object_count = gt_count[f];
    m.detections = det_of[f].size();
    m.p_auc = p_auc_from_flags(s, t, cfg).value;
  });
  double sum = 0.0;
  for (const FrameMetrics& m : report.frames) sum += m.p_auc;
  report.p_auc_frame_mean = frames.empty() ? 0.0 : sum / static_cast<double>(frames.size());
  return report;
}

std::vector<SimilarityBin> binned_delta_pauc(const EvalReport& baseline, const EvalReport& bem,
                                             std::span<const double> edges) {
  require(edges.size() >= 2, ErrorKind::invalid_argument, "similarity bins need at least two edges");
  for (std::size_t k = 0; k + 1 < edges.size(); ++k)
    require(edges[k] < edges[k + 1], ErrorKind::invalid_argument, "bin edges must increase strictly");
  require(baseline.frames.size() == bem.frames.size(), ErrorKind::invalid_argument,
          "baseline and BEM reports cover different frame sets");
  std::map<std::int64_t, double> base_pauc;
  for (const FrameMetrics& f : baseline.frames) base_pauc[f.frame_id] = f.p_auc;

  const std::size_t nbins = edges.size() - 1;
  std::vector<double> sums(nbins, 0.0);
  std::vector<SimilarityBin> bins(nbins);
  for (std::size_t k = 0; k < nbins; ++k) {
    bins[k].c_lo = edges[k];
    bins[k].c_hi = edges[k + 1];
  }
  for (const FrameMetrics& f : bem.frames) {
    const auto it = base_pauc.find(f.frame_id);
    require(it != base_pauc.end(), ErrorKind::invalid_argument,
            "frame " + std::to_string(f.frame_id) + " is missing from the baseline report");
    if (!f.similarity) continue;
    const double c = *f.similarity;
    if (c < edges.front() || c > edges.back()) continue;
    std::size_t k = static_cast<std::size_t>(
        std::upper_bound(edges.begin(), edges.end(), c) - edges.begin());
    k = std::min(k == 0 ? 0 : k - 1, nbins - 1);
    sums[k] += f.p_auc - it->second;
    ++bins[k].frames;
  }
  for (std::size_t k = 0; k < nbins; ++k)
    if (bins[k].frames > 0) bins[k].delta_pauc = sums[k] / static_cast<double>(bins[k].frames);
  return bins;
}

std::vector<SimilarityBin> binned_delta_pauc(const EvalReport& baseline, const EvalReport& bem,
                                             int bins) {
  require(bins >= 1, ErrorKind::invalid_argument, "need at least one similarity bin");
  double lo = 0.0;
  double hi = 0.0;
  bool any = false;
  for (const FrameMetrics& f : bem.frames) {
    if (!f.similarity) continue;
    lo = any ? std::min(lo, *f.similarity) : *f.similarity;
    hi = any ? std::max(hi, *f.similarity) : *f.similarity;
    any = true;
  }
  require(any, ErrorKind::undefined_metric, "no frame carries a similarity value");
  if (hi <= lo) hi = lo + 1e-9;
  std::vector<double> edges;
  for (int k = 0; k <= bins; ++k)
    edges.push_back(k == bins ? hi : lo + (hi - lo) * static_cast<double>(k) / bins);
  return binned_delta_pauc(baseline, bem, edges);
}

nlohmann::ordered_json detail::report_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["map50"] = report.map50;
  j["p_auc"] = report.p_auc;
  j["p_auc_frame_mean"] = report.p_auc_frame_mean;
  j["detections"] = report.detections;
  j["ground_truth"] = report.ground_truth;
  j["true_positives"] = report.true_positives;
  j["false_positives"] = report.false_positives;
  nlohmann::ordered_json curve = nlohmann::ordered_json::array();
  for (const CurvePoint& p : report.curve)
    curve.push_back({{"tau", p.tau}, {"precision", p.precision}, {"tp", p.tp}, {"fp", p.fp}});
  j["curve"] = std::move(curve);
  nlohmann::ordered_json frames = nlohmann::ordered_json::array();
  for (const FrameMetrics& f : report.frames) {
    nlohmann::ordered_json row;
    row["frame_id"] = f.frame_id;
    row["c"] = f.similarity ? nlohmann::ordered_json(*f.similarity) : nlohmann::ordered_json();
    row["object_count"] = f.object_count;
    row["detections"] = f.detections;
    row["p_auc"] = f.p_auc;
    frames.push_back(std::move(row));
  }
  j["per_frame"] = std::move(frames);
  return j;
}

std::string to_json(const EvalReport& report, int indent) {
  return detail::report_json(report).dump(indent);
}

std::string curve_csv(const std::vector<CurvePoint>& curve) {
  std::string out = "tau,precision,tp,fp\n";
  for (const CurvePoint& p : curve)
    out += fmt_double(p.tau) + "," + fmt_double(p.precision) + "," + std::to_string(p.tp) + "," +
           std::to_string(p.fp) + "\n";
  return out;
}

std::string bins_csv(const std::vector<SimilarityBin>& bins) {
  std::string out = "c_lo,c_hi,n_frames,delta_pauc\n";
  for (const SimilarityBin& b : bins)
    out += fmt_double(b.c_lo) + "," + fmt_double(b.c_hi) + "," + std::to_string(b.frames) + "," +
           (b.delta_pauc ? fmt_double(*b.delta_pauc) : std::string()) + "\n";
  return out;
}

std::string similarity_csv(std::span<const FrameSimilarity> frames) {
  std::string out = "frame_id,similarity\n";
  for (const FrameSimilarity& f : frames)
    out += std::to_string(f.frame_id) + "," + (f.similarity ? fmt_double(*f.similarity) : std::string()) + "\n";
  return out;
}

std::vector<FrameSimilarity> parse_similarity_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<FrameSimilarity> rows;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("frame_id", 0) == 0) continue;
    const std::size_t comma = line.find(',');
    require(comma != std::string::npos, ErrorKind::data,
            "similarity line " + std::to_string(line_no) + ": expected frame_id,similarity");
    const std::string where = "similarity line " + std::to_string(line_no) + ": ";
    FrameSimilarity row;
    const char* id_end = line.data() + comma;
    const auto id = std::from_chars(line.data(), id_end, row.frame_id);
    require(id.ec == std::errc() && id.ptr == id_end, ErrorKind::data, where + "bad frame_id");
    if (comma + 1 < line.size()) {
      double value = 0.0;
      const char* end = line.data() + line.size();
      const auto v = std::from_chars(line.data() + comma + 1, end, value);
      require(v.ec == std::errc() && v.ptr == end && std::isfinite(value) && value >= -1.0 && value <= 1.0,
              ErrorKind::data, where + "similarity must be a finite value in [-1,1]");
      row.similarity = value;
    }
    require(rows.empty() || row.frame_id > rows.back().frame_id, ErrorKind::data,
            "similarity line " + std::to_string(line_no) + ": frame ids must increase");
    rows.push_back(row);
  }
  return rows;
}

}  // namespace bem
