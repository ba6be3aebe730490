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

#include "poseunion/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "poseunion/errors.hpp"
#include "poseunion/geometry.hpp"
#include "json_detail.hpp"

namespace poseunion {

namespace detail {

nlohmann::json eval_report_json(const EvalReport& report) {
  return {
      {"per_keypoint", report.per_keypoint},
      {"means", report.means},
      {"counts",
       {{"instances", report.instances},
        {"skipped", report.skipped},
        {"keypoints", report.keypoints}}},
  };
}

EvalReport eval_report_from_json(const nlohmann::json& doc) {
  EvalReport report;
  report.per_keypoint =
      doc.at("per_keypoint").get<std::map<std::string, double>>();
  report.means = doc.at("means").get<std::map<std::string, double>>();
  const auto& counts = doc.at("counts");
  report.instances = counts.at("instances").get<std::size_t>();
  report.skipped = counts.at("skipped").get<std::size_t>();
  report.keypoints = counts.at("keypoints").get<std::size_t>();
  return report;
}

}  // namespace detail

using nlohmann::json;

const std::map<std::string, double>& default_sigma_table() {
  static const std::map<std::string, double> table = {
      {"nose", 0.026},          {"left_eye", 0.025},
      {"right_eye", 0.025},     {"left_ear", 0.035},
      {"right_ear", 0.035},     {"left_shoulder", 0.079},
      {"right_shoulder", 0.079}, {"left_elbow", 0.072},
      {"right_elbow", 0.072},   {"left_wrist", 0.062},
      {"right_wrist", 0.062},   {"left_hip", 0.107},
      {"right_hip", 0.107},     {"left_knee", 0.087},
      {"right_knee", 0.087},    {"left_ankle", 0.089},
      {"right_ankle", 0.089},   {"pelvis", 0.107},
      {"thorax", 0.079},        {"upper_neck", 0.079},
      {"head_top", 0.035},
  };
  return table;
}

OksParams default_sigmas(const UnionSchema& u) {
  const auto& table = default_sigma_table();
  OksParams params;
  params.sigmas.reserve(u.size());
  for (const auto& kp : u.keypoints) {
    auto it = table.find(kp.str());
    if (it == table.end()) {
      throw ConfigError("no default OKS sigma for keypoint \"" + kp.str() +
                        "\"; provide one via a sigmas file");
    }
    params.sigmas.push_back(it->second);
  }
  return params;
}

OksParams parse_sigmas(const UnionSchema& u, std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw FormatError("sigmas parse failed at byte " + std::to_string(e.byte) +
                      ": " + e.what());
  }
  const auto overrides = doc.get<std::map<std::string, double>>();
  for (const auto& [name, sigma] : overrides) {
    if (!u.index_of(name)) {
      throw ConfigError("sigma override \"" + name +
                        "\" names no keypoint in the union");
    }
  }
  const auto& table = default_sigma_table();
  OksParams params;
  params.sigmas.reserve(u.size());
  for (const auto& kp : u.keypoints) {
    double sigma = 0.0;
    if (auto it = overrides.find(kp.str()); it != overrides.end()) {
      sigma = it->second;
    } else if (auto jt = table.find(kp.str()); jt != table.end()) {
      sigma = jt->second;
    } else {
      throw ConfigError("keypoint \"" + kp.str() +
                        "\" has neither a default nor a configured sigma");
    }
    if (!(sigma > 0.0)) {
      throw ConfigError("sigma for \"" + kp.str() + "\" must be positive");
    }
    params.sigmas.push_back(sigma);
  }
  return params;
}

std::string eval_report_to_json(const EvalReport& report) {
  return detail::eval_report_json(report).dump();
}

EvalReport eval_report_from_json(std::string_view json_text) {
  try {
    return detail::eval_report_from_json(json::parse(json_text));
  } catch (const json::exception& e) {
    throw FormatError(std::string("eval report parse failed: ") + e.what());
  }
}

std::vector<std::size_t> subset_slots(const UnionSchema& u,
                                      std::string_view subset) {
  if (subset == "all") {
    std::vector<std::size_t> slots(u.size());
    std::iota(slots.begin(), slots.end(), std::size_t{0});
    return slots;
  }
  const auto registry = SchemaRegistry::builtin();
  std::vector<KeypointName> wanted;
  if (subset == "coco") {
    wanted = registry.get("coco17").keypoints;
  } else if (subset == "mpii") {
    wanted = registry.get("mpii16").keypoints;
  } else if (subset == "shared") {
    wanted = overlap(registry.get("coco17"), registry.get("mpii16"));
  } else {
    throw ConfigError("unknown subset \"" + std::string(subset) +
                      "\" (expected all|coco|mpii|shared)");
  }
  std::vector<std::size_t> slots;
  for (const auto& kp : wanted) {
    if (auto slot = u.index_of(kp.str())) slots.push_back(*slot);
  }
  std::sort(slots.begin(), slots.end());
  return slots;
}

std::optional<double> oks(const UnifiedInstance& pred,
                          const UnifiedInstance& gt, const OksParams& params,
                          const std::vector<std::size_t>& subset) {
  const std::size_t n = gt.coords.size();
  if (pred.coords.size() != n || params.sigmas.size() != n) {
    throw ContractError("oks inputs must share the union size");
  }
  if (!(gt.area > 0.0)) throw ContractError("oks needs gt area > 0");

  double sum = 0.0;
  std::size_t count = 0;
  for (const std::size_t k : subset) {
    if (k >= n) throw ContractError("subset slot out of range");
    if (!gt.mask[k]) continue;
    const double d2 = squared_distance(pred.coords[k], gt.coords[k]);
    const double s = params.sigmas[k];
    sum += std::exp(-d2 / (2.0 * gt.area * s * s));
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

std::vector<double> oks_thresholds() {
  std::vector<double> out;
  for (int i = 0; i < 10; ++i) out.push_back(0.50 + 0.05 * i);
  return out;
}

namespace {

std::size_t labeled_in_subset(const UnifiedInstance& inst,
                              const std::vector<std::size_t>& subset) {
  std::size_t count = 0;
  for (const std::size_t k : subset) {
    if (inst.mask[k]) ++count;
  }
  return count;
}

struct AreaRange {
  const char* suffix;  // "" for the all range
  double lo;
  double hi;  // gt kept when lo < area <= hi

  bool contains(double area) const { return area > lo && area <= hi; }
};

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Matching outcome of one prediction at one threshold.
struct DetOutcome {
  double score;
  std::size_t det_id;
  bool matched;
  bool ignored;
};

struct BucketCurves {
  /// Indexed [threshold]; NaN when the bucket has no usable gts.
  std::vector<double> ap;
  std::vector<double> recall;
  std::size_t usable_gts = 0;
};

/// Greedy matcher and precision/recall accumulation for one area bucket,
/// all thresholds.
BucketCurves evaluate_bucket(
    const std::vector<UnifiedInstance>& preds,
    const std::vector<UnifiedInstance>& gts, const OksParams& params,
    const std::vector<double>& thresholds,
    const std::vector<std::size_t>& subset, const AreaRange& range) {
  // Group by image, keeping input order (the index is the id).
  std::map<std::int64_t, std::vector<std::size_t>> gts_by_image;
  std::map<std::int64_t, std::vector<std::size_t>> preds_by_image;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    gts_by_image[gts[i].image_id].push_back(i);
  }
  for (std::size_t i = 0; i < preds.size(); ++i) {
    preds_by_image[preds[i].image_id].push_back(i);
  }

  // A gt is ignored in this bucket when its area is outside the range or it
  // has nothing labeled inside the subset.
  std::vector<bool> gt_ignored(gts.size());
  std::size_t usable = 0;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    gt_ignored[i] = !range.contains(gts[i].area) ||
                    labeled_in_subset(gts[i], subset) == 0;
    if (!gt_ignored[i]) ++usable;
  }

  BucketCurves curves;
  curves.usable_gts = usable;
  curves.ap.assign(thresholds.size(), std::numeric_limits<double>::quiet_NaN());
  curves.recall = curves.ap;
  if (usable == 0) return curves;

  for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
    const double thr = thresholds[ti];
    std::vector<DetOutcome> outcomes;
    outcomes.reserve(preds.size());

    for (const auto& [image_id, gt_ids] : gts_by_image) {
      auto pit = preds_by_image.find(image_id);
      const std::vector<std::size_t> no_preds;
      const auto& pred_ids_raw =
          pit == preds_by_image.end() ? no_preds : pit->second;

      // Detections in descending score, ties by ascending id.
      std::vector<std::size_t> pred_ids = pred_ids_raw;
      std::stable_sort(pred_ids.begin(), pred_ids.end(),
                       [&](std::size_t a, std::size_t b) {
                         return preds[a].score > preds[b].score;
                       });
      // Ground truths: non-ignored first, ascending id within each group.
      std::vector<std::size_t> ordered_gts = gt_ids;
      std::stable_sort(ordered_gts.begin(), ordered_gts.end(),
                       [&](std::size_t a, std::size_t b) {
                         return gt_ignored[a] < gt_ignored[b];
                       });

      std::vector<bool> gt_matched(gts.size(), false);
      for (const std::size_t d : pred_ids) {
        double best = thr - 1e-10;
        std::ptrdiff_t match = -1;
        for (const std::size_t g : ordered_gts) {
          if (gt_matched[g]) continue;
          // Once a regular match exists, ignored gts cannot improve it.
          if (match >= 0 && !gt_ignored[static_cast<std::size_t>(match)] &&
              gt_ignored[g]) {
            break;
          }
          const double o =
              oks(preds[d], gts[g], params, subset).value_or(0.0);
          if (o > best) {
            best = o;
            match = static_cast<std::ptrdiff_t>(g);
          }
        }
        DetOutcome outcome{preds[d].score, d, false, false};
        if (match >= 0) {
          const auto g = static_cast<std::size_t>(match);
          gt_matched[g] = true;
          outcome.matched = true;
          outcome.ignored = gt_ignored[g];
        } else {
          outcome.ignored = !range.contains(preds[d].area);
        }
        outcomes.push_back(outcome);
      }
    }

    // Predictions on images without any gt entry count as plain false
    // positives for the all range and are ignored outside their own range.
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (gts_by_image.find(preds[i].image_id) == gts_by_image.end()) {
        outcomes.push_back(
            {preds[i].score, i, false, !range.contains(preds[i].area)});
      }
    }

    std::stable_sort(outcomes.begin(), outcomes.end(),
                     [](const DetOutcome& a, const DetOutcome& b) {
                       if (a.score != b.score) return a.score > b.score;
                       return a.det_id < b.det_id;
                     });

    // Precision/recall curve, then 101-point interpolated AP.
    std::vector<double> precision;
    std::vector<double> rc;
    double tp = 0.0;
    double fp = 0.0;
    for (const auto& outcome : outcomes) {
      if (outcome.ignored) continue;
      if (outcome.matched) {
        tp += 1.0;
      } else {
        fp += 1.0;
      }
      precision.push_back(tp / (tp + fp));
      rc.push_back(tp / static_cast<double>(usable));
    }
    for (std::size_t i = precision.size(); i > 1; --i) {
      precision[i - 2] = std::max(precision[i - 2], precision[i - 1]);
    }

    double ap_sum = 0.0;
    for (int j = 0; j <= 100; ++j) {
      const double r = static_cast<double>(j) / 100.0;
      const auto it = std::lower_bound(rc.begin(), rc.end(), r);
      if (it != rc.end()) {
        ap_sum += precision[static_cast<std::size_t>(it - rc.begin())];
      }
    }
    curves.ap[ti] = ap_sum / 101.0;
    curves.recall[ti] = rc.empty() ? 0.0 : rc.back();
  }
  return curves;
}

double mean_of(const std::vector<double>& values) {
  double sum = 0.0;
  for (const double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace

EvalReport average_precision(const std::vector<UnifiedInstance>& preds,
                             const std::vector<UnifiedInstance>& gts,
                             const OksParams& params,
                             const std::vector<double>& thresholds,
                             const std::vector<std::size_t>& subset) {
  if (thresholds.empty()) throw ConfigError("need at least one OKS threshold");

  EvalReport report;
  for (const auto& gt : gts) {
    const std::size_t labeled = labeled_in_subset(gt, subset);
    if (labeled == 0) {
      ++report.skipped;
    } else {
      ++report.instances;
      report.keypoints += labeled;
    }
  }
  if (report.instances == 0) return report;

  const AreaRange ranges[] = {
      {"", 0.0, kInf},
      {"_m", 32.0 * 32.0, 96.0 * 96.0},
      {"_l", 96.0 * 96.0, kInf},
  };
  for (const auto& range : ranges) {
    const auto curves =
        evaluate_bucket(preds, gts, params, thresholds, subset, range);
    if (curves.usable_gts == 0) continue;
    report.means["ap" + std::string(range.suffix)] = mean_of(curves.ap);
    report.means["ar" + std::string(range.suffix)] = mean_of(curves.recall);
    if (range.lo == 0.0) {
      for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
        if (std::abs(thresholds[ti] - 0.50) < 1e-9) {
          report.means["ap50"] = curves.ap[ti];
          report.means["ar50"] = curves.recall[ti];
        }
        if (std::abs(thresholds[ti] - 0.75) < 1e-9) {
          report.means["ap75"] = curves.ap[ti];
          report.means["ar75"] = curves.recall[ti];
        }
      }
    }
  }
  return report;
}

EvalReport pck(const std::vector<UnifiedInstance>& preds,
               const std::vector<UnifiedInstance>& gts, const UnionSchema& u,
               const PckConfig& cfg, const std::vector<std::size_t>& subset) {
  if (preds.size() != gts.size()) {
    throw ContractError("pck pairs predictions with ground truths by order; "
                        "got " + std::to_string(preds.size()) + " vs " +
                        std::to_string(gts.size()));
  }
  if (!(cfg.threshold > 0.0)) throw ConfigError("pck threshold must be > 0");
  if (!(cfg.head_scale > 0.0)) throw ConfigError("head_scale must be > 0");

  const auto head_top = u.index_of("head_top");
  const auto upper_neck = u.index_of("upper_neck");
  const auto left_shoulder = u.index_of("left_shoulder");
  const auto right_hip = u.index_of("right_hip");

  EvalReport report;
  std::vector<std::size_t> correct(u.size(), 0);
  std::vector<std::size_t> total(u.size(), 0);

  for (std::size_t i = 0; i < gts.size(); ++i) {
    const auto& gt = gts[i];
    const auto& pred = preds[i];
    if (gt.coords.size() != u.size() || pred.coords.size() != u.size()) {
      throw ContractError("pck instance not sized to the union");
    }

    double norm = 0.0;
    switch (cfg.normalizer) {
      case PckNormalizer::head_segment:
        if (!head_top || !upper_neck || !gt.mask[*head_top] ||
            !gt.mask[*upper_neck]) {
          norm = 0.0;
        } else {
          norm = cfg.head_scale *
                 distance(gt.coords[*head_top], gt.coords[*upper_neck]);
        }
        break;
      case PckNormalizer::bbox_diag:
        norm = gt.bbox.diag();
        break;
      case PckNormalizer::torso:
        if (!left_shoulder || !right_hip || !gt.mask[*left_shoulder] ||
            !gt.mask[*right_hip]) {
          norm = 0.0;
        } else {
          norm = distance(gt.coords[*left_shoulder], gt.coords[*right_hip]);
        }
        break;
    }
    if (!(norm > 0.0)) {
      ++report.skipped;
      continue;
    }
    ++report.instances;

    for (const std::size_t k : subset) {
      if (!gt.mask[k]) continue;
      ++total[k];
      if (distance(pred.coords[k], gt.coords[k]) <= cfg.threshold * norm) {
        ++correct[k];
      }
    }
  }

  double mean_sum = 0.0;
  std::size_t mean_terms = 0;
  for (const std::size_t k : subset) {
    if (total[k] == 0) continue;
    const double score = static_cast<double>(correct[k]) /
                         static_cast<double>(total[k]);
    report.per_keypoint[u.keypoints[k].str()] = score;
    report.keypoints += total[k];
    mean_sum += score;
    ++mean_terms;
  }
  if (mean_terms > 0) {
    report.means["pck"] = mean_sum / static_cast<double>(mean_terms);
  }
  return report;
}

}  // namespace poseunion
