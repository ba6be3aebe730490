// Copyright (c) 2026, The poseunion Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Independent reference implementations the tests compare the library
// against. Everything here is written as plain loops, deliberately ignoring
// how the library computes the same quantity.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "poseunion/annotation.hpp"
#include "poseunion/losses.hpp"

namespace oracles {

/// Central difference derivative of a scalar function of one vector entry.
inline double finite_diff(std::vector<double> x, std::size_t i, double h,
                          const std::function<double(const std::vector<double>&)>& f) {
  x[i] += h;
  const double hi = f(x);
  x[i] -= 2.0 * h;
  const double lo = f(x);
  return (hi - lo) / (2.0 * h);
}

inline std::vector<double> naive_softmax(const std::vector<double>& logits,
                                         double temperature) {
  double best = logits[0];
  for (const double l : logits) best = std::max(best, l);
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - best) / temperature);
    total += out[i];
  }
  for (auto& v : out) v /= total;
  return out;
}

inline double naive_soft_argmax(const std::vector<double>& probs) {
  double coord = 0.0;
  for (std::size_t b = 0; b < probs.size(); ++b) {
    coord += probs[b] * ((static_cast<double>(b) + 0.5) /
                         static_cast<double>(probs.size()));
  }
  return coord;
}

/// Sum of squared distances over labeled slots, written out longhand.
inline double naive_ck_loss(const std::vector<poseunion::Point2>& pred,
                            const poseunion::UnifiedInstance& gt) {
  double total = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    if (!gt.mask[k]) continue;
    const double dx = pred[k].x - gt.coords[k].x;
    const double dy = pred[k].y - gt.coords[k].y;
    total += dx * dx + dy * dy;
  }
  return total;
}

/// KL(t || p) = sum t log(t / p), skipping t = 0 terms.
inline double naive_kl(const std::vector<double>& t,
                       const std::vector<double>& p) {
  double total = 0.0;
  for (std::size_t b = 0; b < t.size(); ++b) {
    if (t[b] > 0.0) total += t[b] * std::log(t[b] / p[b]);
  }
  return total;
}

/// OKS per the documented definition: mean over labeled subset slots of
/// exp(-d^2 / (2 * area * sigma^2)).
inline std::optional<double> naive_oks(const poseunion::UnifiedInstance& pred,
                                       const poseunion::UnifiedInstance& gt,
                                       const std::vector<double>& sigmas,
                                       const std::vector<std::size_t>& subset) {
  double total = 0.0;
  std::size_t count = 0;
  for (const std::size_t k : subset) {
    if (!gt.mask[k]) continue;
    const double dx = pred.coords[k].x - gt.coords[k].x;
    const double dy = pred.coords[k].y - gt.coords[k].y;
    const double d2 = dx * dx + dy * dy;
    total += std::exp(-d2 / (2.0 * gt.area * sigmas[k] * sigmas[k]));
    ++count;
  }
  if (count == 0) return std::nullopt;
  return total / static_cast<double>(count);
}

/// One detection in the reference AP evaluator.
struct RefDet {
  double score = 0.0;
  std::size_t id = 0;
  bool matched = false;
  bool ignore = false;
};

/// Reference OKS AP/AR evaluator: per-image greedy matching in descending
/// score order, pooled 101-point interpolated precision, recall at the end
/// of the pooled list. Mirrors the documented matching rules from scratch.
struct RefApResult {
  std::map<std::string, double> means;
  std::size_t usable_gts = 0;
};

inline RefApResult naive_average_precision(
    const std::vector<poseunion::UnifiedInstance>& preds,
    const std::vector<poseunion::UnifiedInstance>& gts,
    const std::vector<double>& sigmas, const std::vector<double>& thresholds,
    const std::vector<std::size_t>& subset, double area_lo, double area_hi) {
  // Group by image, keeping original indices as ids.
  std::map<std::int64_t, std::vector<std::size_t>> gt_by_image;
  std::map<std::int64_t, std::vector<std::size_t>> pred_by_image;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    gt_by_image[gts[i].image_id].push_back(i);
  }
  for (std::size_t i = 0; i < preds.size(); ++i) {
    pred_by_image[preds[i].image_id].push_back(i);
  }

  auto labeled_in_subset = [&](const poseunion::UnifiedInstance& inst) {
    for (const std::size_t k : subset) {
      if (inst.mask[k]) return true;
    }
    return false;
  };
  auto gt_ignored = [&](const poseunion::UnifiedInstance& g) {
    if (!labeled_in_subset(g)) return true;
    return !(area_lo < g.area && g.area <= area_hi);
  };

  RefApResult out;
  for (const auto& g : gts) {
    if (!gt_ignored(g)) ++out.usable_gts;
  }
  if (out.usable_gts == 0) return out;

  double ap_sum = 0.0;
  double ar_sum = 0.0;
  for (const double thr : thresholds) {
    std::vector<RefDet> dets;
    for (const auto& [image_id, pred_ids] : pred_by_image) {
      // Score-descending, id-ascending order.
      std::vector<std::size_t> order = pred_ids;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (preds[a].score != preds[b].score) {
          return preds[a].score > preds[b].score;
        }
        return a < b;
      });
      std::vector<std::size_t> gt_ids;
      if (auto it = gt_by_image.find(image_id); it != gt_by_image.end()) {
        gt_ids = it->second;
      }
      // Non-ignored gts first, ids ascending within each class.
      std::stable_sort(gt_ids.begin(), gt_ids.end(),
                       [&](std::size_t a, std::size_t b) {
                         const bool ia = gt_ignored(gts[a]);
                         const bool ib = gt_ignored(gts[b]);
                         if (ia != ib) return !ia;
                         return a < b;
                       });
      std::vector<bool> taken(gts.size(), false);
      for (const std::size_t pi : order) {
        double best = thr - 1e-10;
        std::ptrdiff_t best_gt = -1;
        bool best_ignored = false;
        for (const std::size_t gi : gt_ids) {
          if (taken[gi]) continue;
          const bool ign = gt_ignored(gts[gi]);
          if (best_gt >= 0 && !best_ignored && ign) break;
          const auto score = naive_oks(preds[pi], gts[gi], sigmas, subset);
          if (!score) continue;
          if (*score > best) {
            best = *score;
            best_gt = static_cast<std::ptrdiff_t>(gi);
            best_ignored = ign;
          }
        }
        RefDet det;
        det.score = preds[pi].score;
        det.id = pi;
        if (best_gt >= 0) {
          taken[static_cast<std::size_t>(best_gt)] = true;
          det.matched = !best_ignored;
          det.ignore = best_ignored;
        } else {
          det.ignore = !(area_lo < preds[pi].area && preds[pi].area <= area_hi);
        }
        dets.push_back(det);
      }
    }
    std::sort(dets.begin(), dets.end(), [](const RefDet& a, const RefDet& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.id < b.id;
    });

    std::vector<double> precision;
    std::vector<double> recall;
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (const auto& det : dets) {
      if (det.ignore) continue;
      if (det.matched) {
        ++tp;
      } else {
        ++fp;
      }
      precision.push_back(static_cast<double>(tp) /
                          static_cast<double>(tp + fp));
      recall.push_back(static_cast<double>(tp) /
                       static_cast<double>(out.usable_gts));
    }
    // Precision envelope, then 101-point interpolation.
    for (std::size_t i = precision.size(); i-- > 1;) {
      precision[i - 1] = std::max(precision[i - 1], precision[i]);
    }
    double ap = 0.0;
    for (int r = 0; r <= 100; ++r) {
      const double target = static_cast<double>(r) / 100.0;
      const auto it = std::lower_bound(recall.begin(), recall.end(), target);
      if (it != recall.end()) {
        ap += precision[static_cast<std::size_t>(it - recall.begin())];
      }
    }
    ap /= 101.0;
    ap_sum += ap;
    ar_sum += recall.empty() ? 0.0 : recall.back();

    const bool is50 = std::abs(thr - 0.50) < 1e-9;
    const bool is75 = std::abs(thr - 0.75) < 1e-9;
    if (is50) {
      out.means["ap50"] = ap;
      out.means["ar50"] = recall.empty() ? 0.0 : recall.back();
    }
    if (is75) {
      out.means["ap75"] = ap;
      out.means["ar75"] = recall.empty() ? 0.0 : recall.back();
    }
  }
  out.means["ap"] = ap_sum / static_cast<double>(thresholds.size());
  out.means["ar"] = ar_sum / static_cast<double>(thresholds.size());
  return out;
}

/// Straight-line two-layer forward pass: nested loops, no linear algebra
/// library.
inline std::vector<double> naive_forward(
    const std::vector<std::vector<double>>& W1, const std::vector<double>& b1,
    const std::vector<std::vector<double>>& W2, const std::vector<double>& b2,
    const std::vector<double>& z) {
  std::vector<double> hidden(W1.size());
  for (std::size_t i = 0; i < W1.size(); ++i) {
    double acc = b1[i];
    for (std::size_t j = 0; j < z.size(); ++j) acc += W1[i][j] * z[j];
    hidden[i] = std::tanh(acc);
  }
  std::vector<double> out(W2.size());
  for (std::size_t i = 0; i < W2.size(); ++i) {
    double acc = b2[i];
    for (std::size_t j = 0; j < hidden.size(); ++j) {
      acc += W2[i][j] * hidden[j];
    }
    out[i] = acc;
  }
  return out;
}

/// PCK fraction per slot: distance <= threshold * norm, counted longhand.
struct RefPck {
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> per_slot;

  void add(const poseunion::UnifiedInstance& pred,
           const poseunion::UnifiedInstance& gt, double threshold, double norm,
           const std::vector<std::size_t>& subset) {
    for (const std::size_t k : subset) {
      if (!gt.mask[k]) continue;
      const double dx = pred.coords[k].x - gt.coords[k].x;
      const double dy = pred.coords[k].y - gt.coords[k].y;
      const double d = std::sqrt(dx * dx + dy * dy);
      auto& [hit, total] = per_slot[k];
      if (d <= threshold * norm) ++hit;
      ++total;
    }
  }

  double macro_mean() const {
    double total = 0.0;
    std::size_t slots = 0;
    for (const auto& [slot, counts] : per_slot) {
      if (counts.second == 0) continue;
      total += static_cast<double>(counts.first) /
               static_cast<double>(counts.second);
      ++slots;
    }
    return slots == 0 ? 0.0 : total / static_cast<double>(slots);
  }
};

}  // namespace oracles
