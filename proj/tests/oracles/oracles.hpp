#pragma once

// Brute-force reference implementations written from the definitions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "bem/detection.hpp"
#include "bem/image.hpp"

namespace bem::oracle {

struct Average {
  std::vector<float> pixels;
  std::vector<std::uint32_t> coverage;
};

/// B(x) = sum_t I_t(x) M_t(x) / sum_t M_t(x), pixel by pixel, t ascending.
/// Uncovered pixels take the plain temporal mean.
inline Average masked_average(const std::vector<Frame>& frames, const std::vector<ForegroundMask>& masks) {
  const int w = frames[0].width;
  const int h = frames[0].height;
  const int ch = frames[0].channels;
  Average out;
  out.pixels.assign(static_cast<std::size_t>(w * h * ch), 0.0f);
  out.coverage.assign(static_cast<std::size_t>(w * h), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double num = 0.0;
        double den = 0.0;
        double all = 0.0;
        for (std::size_t t = 0; t < frames.size(); ++t) {
          const double v = frames[t].at(x, y, c);
          const double m = masks[t].at(x, y) ? 1.0 : 0.0;
          num += v * m;
          den += m;
          all += v;
        }
        const double b = den > 0.0 ? num / den : all / static_cast<double>(frames.size());
        out.pixels[static_cast<std::size_t>((y * w + x) * ch + c)] = static_cast<float>(b);
        out.coverage[static_cast<std::size_t>(y * w + x)] = static_cast<std::uint32_t>(den);
      }
    }
  }
  return out;
}

struct Quality {
  double mae = 0.0;
  double ghost_rate = 0.0;
};

/// Residual |mean_c I - mean_c B| scanned over background pixels.
inline Quality quality(const Frame& frame, const std::vector<float>& bg, const ForegroundMask& mask, double tau) {
  double sum = 0.0;
  double ghosts = 0.0;
  double n = 0.0;
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      if (!mask.at(x, y)) continue;
      double mi = 0.0;
      double mb = 0.0;
      for (int c = 0; c < frame.channels; ++c) {
        mi += frame.at(x, y, c);
        mb += bg[static_cast<std::size_t>((y * frame.width + x) * frame.channels + c)];
      }
      const double r = std::fabs(mi / frame.channels - mb / frame.channels);
      sum += r;
      ghosts += r > tau ? 1.0 : 0.0;
      n += 1.0;
    }
  }
  return {sum / n, ghosts / n};
}

inline double box_iou(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = ix * iy;
  const double uni = (a.x2 - a.x1) * (a.y2 - a.y1) + (b.x2 - b.x1) * (b.y2 - b.y1) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

inline bool same_class(const Detection& d, const GroundTruthBox& g) {
  return d.frame_id == g.frame_id && (!d.label || *d.label == g.label);
}

/// Visit detections by descending score (ties: input index); each takes the
/// free ground truth with the highest IoU >= thr (ties: lowest index).
inline std::vector<bool> greedy_match(const std::vector<Detection>& dets, const std::vector<GroundTruthBox>& gts,
                                      double thr = 0.5) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  std::vector<bool> used(gts.size(), false);
  std::vector<bool> tp(dets.size(), false);
  for (std::size_t i : order) {
    int pick = -1;
    double best = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (used[g] || !same_class(dets[i], gts[g])) continue;
      const double v = box_iou(dets[i].box, gts[g].box);
      if (v >= thr && v > best) {
        best = v;
        pick = static_cast<int>(g);
      }
    }
    if (pick >= 0) {
      used[static_cast<std::size_t>(pick)] = true;
      tp[i] = true;
    }
  }
  return tp;
}

/// Enumerates every partial one-to-one assignment with IoU >= thr and keeps
/// the one whose IoU sequence, in descending score order, is
/// lexicographically largest. Exponential; tiny inputs only.
inline std::vector<int> exhaustive_match(const std::vector<Detection>& dets, const std::vector<GroundTruthBox>& gts,
                                         double thr = 0.5) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  std::vector<int> current(dets.size(), -1);
  std::vector<int> best_assign(dets.size(), -1);
  std::vector<double> best_key;
  std::vector<bool> used(gts.size(), false);
  std::function<void(std::size_t)> rec = [&](std::size_t k) {
    if (k == order.size()) {
      std::vector<double> key;
      for (std::size_t i : order)
        key.push_back(current[i] < 0 ? -1.0 : box_iou(dets[i].box, gts[static_cast<std::size_t>(current[i])].box));
      if (best_key.empty() || key > best_key) {
        best_key = key;
        best_assign = current;
      }
      return;
    }
    const std::size_t i = order[k];
    rec(k + 1);
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (used[g] || !same_class(dets[i], gts[g]) || box_iou(dets[i].box, gts[g].box) < thr) continue;
      used[g] = true;
      current[i] = static_cast<int>(g);
      rec(k + 1);
      current[i] = -1;
      used[g] = false;
    }
  };
  rec(0);
  return best_assign;
}

/// 101-point interpolated AP straight from the definition: for each recall
/// level r, the best precision among PR points with recall >= r.
inline double ap50(const std::vector<Detection>& dets, const std::vector<GroundTruthBox>& gts) {
  const std::vector<bool> tp = greedy_match(dets, gts);
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  std::vector<double> prec;
  std::vector<double> rec;
  double hits = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    hits += tp[order[k]] ? 1.0 : 0.0;
    prec.push_back(hits / static_cast<double>(k + 1));
    rec.push_back(hits / static_cast<double>(gts.size()));
  }
  double total = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double r = k / 100.0;
    double p = 0.0;
    for (std::size_t i = 0; i < prec.size(); ++i)
      if (rec[i] >= r) p = std::max(p, prec[i]);
    total += p;
  }
  return total / 101.0;
}

/// P-AUC by independent recount: at every threshold, rematch only the
/// detections that survive it.
inline double pauc_recount(const std::vector<Detection>& dets, const std::vector<GroundTruthBox>& gts, int points,
                           double empty_precision = 1.0) {
  std::vector<double> tau;
  std::vector<double> prec;
  for (int j = 0; j < points; ++j) {
    const double t = 1.0 - static_cast<double>(j) / static_cast<double>(points - 1);
    std::vector<Detection> kept;
    for (const Detection& d : dets)
      if (d.score >= t) kept.push_back(d);
    const std::vector<bool> flags = greedy_match(kept, gts);
    const auto hits = static_cast<double>(std::count(flags.begin(), flags.end(), true));
    tau.push_back(t);
    prec.push_back(kept.empty() ? empty_precision : hits / static_cast<double>(kept.size()));
  }
  double area = 0.0;
  for (std::size_t j = 0; j + 1 < tau.size(); ++j) area += prec[j] * (tau[j] - tau[j + 1]);
  return area;
}

/// Average ranks by counting: 1 + #smaller + (#equal - 1) / 2.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0.0;
    double equal = 0.0;
    for (double u : v) {
      less += u < v[i] ? 1.0 : 0.0;
      equal += u == v[i] ? 1.0 : 0.0;
    }
    r[i] = 1.0 + less + (equal - 1.0) / 2.0;
  }
  return r;
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i] / n;
    my += ry[i] / n;
  }
  double num = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  return num / std::sqrt(dx * dy);
}

/// Descending ranks, ties by input position.
inline std::vector<int> descending_ranks(const std::vector<double>& s) {
  std::vector<int> r(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    int rank = 1;
    for (std::size_t j = 0; j < s.size(); ++j)
      if (s[j] > s[i] || (s[j] == s[i] && j < i)) ++rank;
    r[i] = rank;
  }
  return r;
}

/// Grid statistics computed cell by cell with a two-pass variance.
inline std::vector<double> grid_stats(const Frame& f, int grid) {
  std::vector<double> out;
  for (int gy = 0; gy < grid; ++gy) {
    for (int gx = 0; gx < grid; ++gx) {
      const int x0 = gx * f.width / grid;
      const int x1 = (gx + 1) * f.width / grid;
      const int y0 = gy * f.height / grid;
      const int y1 = (gy + 1) * f.height / grid;
      const double n = static_cast<double>((x1 - x0) * (y1 - y0));
      for (int c = 0; c < f.channels; ++c) {
        double mean = 0.0;
        for (int y = y0; y < y1; ++y)
          for (int x = x0; x < x1; ++x) mean += f.at(x, y, c);
        mean /= n;
        double var = 0.0;
        for (int y = y0; y < y1; ++y)
          for (int x = x0; x < x1; ++x) var += (f.at(x, y, c) - mean) * (f.at(x, y, c) - mean);
        out.push_back(mean);
        out.push_back(std::sqrt(var / n));
      }
    }
  }
  double norm = 0.0;
  for (double v : out) norm += v * v;
  norm = std::sqrt(norm);
  for (double& v : out) v /= norm;
  return out;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace bem::oracle
