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

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "poseunion/annotation.hpp"
#include "poseunion/schema.hpp"

namespace poseunion {

enum class PckNormalizer {
  /// head_scale * distance(head_top, upper_neck); the PCKh convention.
  head_segment,
  bbox_diag,
  /// distance(left_shoulder, right_hip).
  torso,
};

struct PckConfig {
  double threshold = 0.5;
  PckNormalizer normalizer = PckNormalizer::bbox_diag;
  double head_scale = 0.6;
};

struct OksParams {
  /// Per union slot, the OKS falloff constant.
  std::vector<double> sigmas;
};

/// The standard per-keypoint OKS constants plus defaults for the trunk/head
/// points (pelvis = hip, thorax = upper_neck = shoulder, head_top = ear).
const std::map<std::string, double>& default_sigma_table();

/// Sigmas for a union, from the default table. Unknown keypoint names throw
/// ConfigError; pass explicit sigmas for custom skeletons.
OksParams default_sigmas(const UnionSchema& u);

/// Applies overrides from a JSON object {keypoint_name: sigma} on top of
/// the defaults.
OksParams parse_sigmas(const UnionSchema& u, std::string_view json_text);

struct EvalReport {
  std::map<std::string, double> per_keypoint;
  /// Defined metric means, e.g. "pck" or "ap"/"ap50"/"ap75"/"ap_m"/"ap_l"/
  /// "ar"/"ar50"/"ar75". Metrics with no supporting ground truth are
  /// omitted rather than reported as a sentinel.
  std::map<std::string, double> means;
  std::size_t instances = 0;
  std::size_t skipped = 0;
  std::size_t keypoints = 0;
};

std::string eval_report_to_json(const EvalReport& report);
EvalReport eval_report_from_json(std::string_view json_text);

/// Union-slot indices for a named evaluation subset: all | coco | mpii |
/// shared (coco-mpii overlap).
std::vector<std::size_t> subset_slots(const UnionSchema& u,
                                      std::string_view subset);

/// Object keypoint similarity over gt-labeled slots restricted to the
/// subset. Empty intersection yields nullopt (instance excluded).
std::optional<double> oks(const UnifiedInstance& pred,
                          const UnifiedInstance& gt, const OksParams& params,
                          const std::vector<std::size_t>& subset);

/// The standard {0.50, 0.55, ..., 0.95} threshold grid.
std::vector<double> oks_thresholds();

/// OKS-based AP/AR with per-image greedy matching, 101-point interpolated
/// precision, and M/L area buckets. Predictions carry confidence in
/// `score`; gts and preds are grouped by image_id.
EvalReport average_precision(const std::vector<UnifiedInstance>& preds,
                             const std::vector<UnifiedInstance>& gts,
                             const OksParams& params,
                             const std::vector<double>& thresholds,
                             const std::vector<std::size_t>& subset);

/// PCK with preds paired to gts by sequence order. Boundary rule is the
/// closed inequality: distance <= threshold * normalizer counts as correct.
EvalReport pck(const std::vector<UnifiedInstance>& preds,
               const std::vector<UnifiedInstance>& gts, const UnionSchema& u,
               const PckConfig& cfg, const std::vector<std::size_t>& subset);

}  // namespace poseunion
