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

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "poseunion/losses.hpp"

namespace poseunion {

/// Two-layer perceptron emitting per-keypoint axis logits:
/// logits = W2 * tanh(W1 * z + b1) + b2, reshaped to keypoints x 2 x bins.
struct StudentModel {
  Eigen::MatrixXd W1;  // hidden x d_in
  Eigen::VectorXd b1;  // hidden
  Eigen::MatrixXd W2;  // (keypoints * 2 * bins) x hidden
  Eigen::VectorXd b2;
  std::size_t keypoints = 0;
  std::size_t bins = 0;

  std::size_t d_in() const { return static_cast<std::size_t>(W1.cols()); }
  std::size_t hidden() const { return static_cast<std::size_t>(W1.rows()); }
  std::size_t out_dim() const { return keypoints * 2 * bins; }
  std::size_t parameter_count() const;
  bool finite() const;
};

/// Per-layer uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) initialization.
StudentModel init_student(std::size_t d_in, std::size_t hidden,
                          std::size_t keypoints, std::size_t bins,
                          std::uint64_t seed);

/// Same shapes as the model; used for both gradients and momentum.
struct ModelGradients {
  Eigen::MatrixXd W1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd W2;
  Eigen::VectorXd b2;

  bool finite() const;
};

ModelGradients zeros_like(const StudentModel& m);

/// Activations retained for the backward pass. Column i of each matrix
/// belongs to batch item i.
struct ForwardCache {
  Eigen::MatrixXd Z;       // d_in x n
  Eigen::MatrixXd H;       // hidden x n (post-tanh)
  Eigen::MatrixXd logits;  // out_dim x n
};

ForwardCache forward_batch(const StudentModel& m, const Eigen::MatrixXd& Z);

/// Single-instance forward producing the loss-module view.
StudentPrediction forward(const StudentModel& m, const Eigen::VectorXd& z,
                          double temperature = 1.0);

/// Prediction from an already-computed logit column.
StudentPrediction prediction_from_column(const StudentModel& m,
                                         const Eigen::MatrixXd& logits,
                                         std::size_t column,
                                         double temperature = 1.0);

/// Exact chain rule through linear-tanh-linear. `upstream` holds
/// d loss / d logits per batch column; the returned gradients are summed
/// over the batch (callers fold any 1/n into upstream).
ModelGradients backward_batch(const StudentModel& m, const ForwardCache& cache,
                              const Eigen::MatrixXd& upstream);

ModelGradients backward(const StudentModel& m, const Eigen::VectorXd& z,
                        const std::vector<double>& upstream);

/// Linear warmup to base_lr over warmup_steps, then cosine annealing to
/// min_lr at total_steps.
struct LrSchedule {
  double base_lr = 1e-2;
  double min_lr = 0.0;
  std::size_t warmup_steps = 0;
  std::size_t total_steps = 1;

  double lr_at(std::size_t step) const;
};

struct TrainState {
  StudentModel params;
  ModelGradients velocity;
  std::size_t step = 0;
  double lr = 0.0;
};

TrainState make_train_state(StudentModel m);

/// Momentum SGD: velocity = mu * velocity - lr * grads; params += velocity.
/// Non-finite gradients abort with ContractError (divergence guard).
void sgd_step(TrainState& state, const ModelGradients& grads,
              const LrSchedule& schedule, double momentum);

/// Gaussian-bump oracle standing in for a pretrained subset-expert teacher.
struct TeacherOracle {
  std::string teacher_id;
  std::vector<std::size_t> covered;
  /// Gaussian width in bin units.
  double concentration = 2.0;
  /// Center jitter std in normalized coordinate units.
  double noise = 0.0;
  std::uint64_t seed = 0;

  void validate(std::size_t union_size) const;
};

/// Discretized Gaussian distributions over bins, centered at the gt
/// coordinate plus deterministic per-(seed, image_id, slot) jitter. gt
/// coordinates must be normalized to [0,1].
TeacherPrediction teacher_predict(const TeacherOracle& oracle,
                                  const UnifiedInstance& gt,
                                  std::size_t bins);

/// Versioned binary checkpoint; byte-exact round-trip of all parameters.
std::string serialize_checkpoint(const TrainState& state,
                                 std::string_view config_digest);

struct Checkpoint {
  TrainState state;
  std::string config_digest;
};

Checkpoint parse_checkpoint(std::string_view bytes);

}  // namespace poseunion
