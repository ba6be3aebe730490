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

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "poseunion/annotation.hpp"
#include "poseunion/geometry.hpp"

namespace poseunion {

/// Per-keypoint pair of categorical distributions over discretized x and y
/// axes (coordinate-classification form; the domain the distillation KL is
/// computed on).
struct KeypointDistribution {
  std::vector<double> x_probs;
  std::vector<double> y_probs;

  /// Throws ContractError unless both vectors are non-negative and sum to 1
  /// within 1e-9.
  void validate() const;
};

/// Student output for one instance in both views: coordinates (soft-argmax
/// of the distributions) and the distributions themselves, plus the raw
/// logits that produced them. Logit layout is flat with index
/// (k * 2 + axis) * bins + b, axis 0 = x.
struct StudentPrediction {
  std::vector<Point2> coords;
  std::vector<KeypointDistribution> dists;
  std::vector<double> logits;
  std::size_t bins = 0;
  /// Softmax temperature the dists were produced with; gradients include
  /// the matching 1/temperature factor.
  double temperature = 1.0;

  std::size_t keypoints() const { return coords.size(); }
};

/// Builds the consistent prediction triple from raw logits:
/// dists = per-axis softmax(logits / temperature), coords = soft-argmax.
StudentPrediction make_prediction(std::vector<double> logits,
                                  std::size_t keypoints, std::size_t bins,
                                  double temperature = 1.0);

struct TeacherPrediction {
  std::string teacher_id;
  /// Union-slot indices this teacher covers; dists is parallel to it.
  std::vector<std::size_t> covered;
  std::vector<KeypointDistribution> dists;
};

struct LossWeights {
  double alpha = 0.0;
  std::map<std::string, double> betas;

  /// Throws ConfigError unless alpha is in [0,1] and all betas are >= 0.
  void validate() const;
};

enum class KlDirection {
  /// KL(t || p): teacher is the target distribution; gradient w.r.t.
  /// student logits is (p - t) / temperature.
  teacher_target,
  /// KL(p || t): reverse direction.
  student_target,
};

/// Full loss configuration as carried by config files.
struct LossConfig {
  LossWeights weights;
  std::size_t bins = 64;
  KlDirection kl_direction = KlDirection::teacher_target;
  double temperature = 1.0;
};

LossConfig parse_loss_config(std::string_view json_text);
std::string write_loss_config(const LossConfig& config);

/// Numerically stable max-subtracted softmax, optionally tempered.
std::vector<double> softmax(std::span<const double> logits,
                            double temperature = 1.0);

double bin_center(std::size_t b, std::size_t bins);

struct SoftArgmaxResult {
  Point2 coord;
  /// d coord.x / d x_logit_b and d coord.y / d y_logit_b. With
  /// p = softmax(l / tau): d x / d l_b = p_b * (c_b - x) / tau.
  std::vector<double> dx_dlogit;
  std::vector<double> dy_dlogit;
};

/// Expected bin-center coordinate under the distribution, with the
/// per-axis jacobian w.r.t. the producing logits.
SoftArgmaxResult soft_argmax_decode(const KeypointDistribution& d,
                                    double temperature = 1.0);

struct CkLossResult {
  double value = 0.0;
  /// d value / d coords. Exactly +0.0 (bitwise) on every slot with
  /// mask false; those entries are never touched.
  std::vector<Point2> grad_coords;
};

/// Conditional keypoint loss: value = sum over labeled slots of
/// ||p_k - g_k||^2, gradient 2 (p_k - g_k). gt coordinates must already be
/// bbox-normalized to [0,1].
CkLossResult conditional_keypoint_loss(const StudentPrediction& pred,
                                       const UnifiedInstance& gt);

struct KlLossResult {
  double value = 0.0;
  /// Flat student-logit gradient; bitwise +0.0 on every logit of slots the
  /// teacher does not cover.
  std::vector<double> grad_logits;
};

/// Distillation loss between student and one teacher, summed over the
/// teacher's covered slots, both axes.
KlLossResult kl_distill_loss(const StudentPrediction& pred,
                             const TeacherPrediction& teacher,
                             KlDirection direction = KlDirection::teacher_target);

struct TotalLossResult {
  double value = 0.0;
  double ck_value = 0.0;
  std::map<std::string, double> kl_values;
  /// alpha-weighted coordinate-space gradient (the L_CK path only).
  std::vector<Point2> grad_coords;
  /// Complete gradient w.r.t. student logits: the KL path plus the L_CK
  /// path composed through the soft-argmax jacobian. This is what the
  /// model backward consumes.
  std::vector<double> grad_logits;
};

/// Weighted total: alpha * L_CK + (1 - alpha) * sum_j beta_j * L_D(T_j).
TotalLossResult total_loss(const StudentPrediction& pred,
                           const UnifiedInstance& gt,
                           const std::vector<TeacherPrediction>& teachers,
                           const LossWeights& w,
                           KlDirection direction = KlDirection::teacher_target);

/// Composes a coordinate-space gradient through the soft-argmax jacobian
/// into flat logit space.
std::vector<double> coord_grad_to_logits(const StudentPrediction& pred,
                                         const std::vector<Point2>& grad_coords);

}  // namespace poseunion
