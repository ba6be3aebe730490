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
#include <map>
#include <string>
#include <vector>

#include "poseunion/losses.hpp"
#include "poseunion/metrics.hpp"
#include "poseunion/model.hpp"
#include "poseunion/schema.hpp"
#include "poseunion/synthetic.hpp"

namespace poseunion {

struct TeacherConfig {
  std::string id;
  /// Schema whose mapped slots the teacher covers.
  std::string schema;
  double concentration = 1.5;
  double noise = 0.0;
};

struct OptimizerConfig {
  double base_lr = 0.3;
  double min_lr = 0.0;
  /// Warmup length as a fraction of total steps.
  double warmup_frac = 0.05;
  double momentum = 0.9;
};

struct ModelConfig {
  std::size_t d_in = 32;
  std::size_t hidden = 256;
};

/// Full description of one synthetic two-dataset experiment. Dataset A
/// mimics MPII-style labels, dataset B COCO-style labels, over the union of
/// both schemas.
struct ExperimentConfig {
  std::string schema_a = "mpii16";
  std::string schema_b = "coco17";
  std::size_t train_count_a = 512;
  std::size_t train_count_b = 512;
  std::size_t eval_count_a = 128;
  std::size_t eval_count_b = 128;
  std::size_t epochs = 120;
  std::size_t batch_size = 64;
  std::uint64_t seed = 1;
  bool distill = true;
  /// Epoch interval for eval snapshots; 0 records the final eval only.
  std::size_t eval_every = 0;
  LossConfig loss;
  ModelConfig model;
  OptimizerConfig optimizer;
  SyntheticPoseGenerator generator;
  std::vector<TeacherConfig> teachers;

  void validate() const;
};

/// Config with the default two-teacher distillation setup (alpha 0.30,
/// beta mpii 0.25, beta coco 0.45).
ExperimentConfig default_experiment_config();

ExperimentConfig parse_experiment_config(std::string_view json_text);
/// Canonical serialization; its digest identifies the config.
std::string write_experiment_config(const ExperimentConfig& config);
std::string experiment_config_digest(const ExperimentConfig& config);

struct ExperimentData {
  UnionSchema u;
  SkeletonSchema schema_a;
  SkeletonSchema schema_b;
  SyntheticDataset train_a;
  SyntheticDataset train_b;
  SyntheticDataset eval_a;
  SyntheticDataset eval_b;
};

ExperimentData generate_experiment_data(const ExperimentConfig& config);

struct ExperimentEval {
  /// PCKh@0.5 and @0.1 on dataset-A-style held-out labels.
  EvalReport a_pckh;
  EvalReport a_pckh01;
  /// OKS AP on dataset-B-style held-out labels.
  EvalReport b_ap;
  /// PCK (bbox-diagonal normalizer) on the hidden all-21 truth of both
  /// held-out sets, at thresholds 0.5 and 0.1.
  EvalReport full_pck;
  EvalReport full_pck01;
};

ExperimentEval evaluate_experiment(const StudentModel& model,
                                   const ExperimentData& data,
                                   const ExperimentConfig& config);

/// Model predictions for a dataset's latents as unified instances (all
/// slots predicted; score = mean peak probability).
std::vector<UnifiedInstance> predict_instances(const StudentModel& model,
                                               const SyntheticDataset& data,
                                               double temperature = 1.0);

struct StepRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double lr = 0.0;
  double total = 0.0;
  double ck = 0.0;
  std::map<std::string, double> kl;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double total = 0.0;
  double ck = 0.0;
  std::map<std::string, double> kl;
};

struct EvalSnapshot {
  std::size_t epoch = 0;
  ExperimentEval eval;
};

struct RunLog {
  std::string config_digest;
  /// Canonical config JSON (text), embedded for self-containment.
  std::string config_json;
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
  std::vector<EvalSnapshot> snapshots;
  ExperimentEval final_eval;
  /// Wall clock; serialized in a separate timing block excluded from the
  /// deterministic view.
  double wall_seconds = 0.0;
};

std::string run_log_to_json(const RunLog& log);
/// Identical to run_log_to_json minus the timing block; byte-identical
/// across reruns with the same config and seed.
std::string deterministic_run_log_json(const RunLog& log);
RunLog parse_run_log(std::string_view bytes);

std::string experiment_eval_to_json(const ExperimentEval& eval);

struct TrainResult {
  TrainState state;
  RunLog log;
};

TrainResult train(const ExperimentConfig& config);
TrainResult train_on(const ExperimentConfig& config,
                     const ExperimentData& data);

struct AblationAxes {
  /// Empty axes fall back to the base config's value (a 1-point grid).
  std::vector<bool> distill;
  std::vector<double> alphas;
  std::vector<std::map<std::string, double>> beta_sets;
};

struct AblationCell {
  bool distill = false;
  double alpha = 0.0;
  std::map<std::string, double> betas;
  std::vector<std::uint64_t> seeds;
  /// Parallel to seeds; failed runs leave a default eval and an error
  /// message in `errors`.
  std::vector<ExperimentEval> evals;
  std::vector<std::string> errors;
  std::vector<RunLog> logs;
  /// Aggregates over successful seeds: key -> (mean, stddev).
  std::map<std::string, std::pair<double, double>> aggregates;
};

struct AblationReport {
  std::vector<AblationCell> cells;
};

/// One run per cell per seed; cell failures are recorded and the matrix
/// continues.
AblationReport run_ablation_matrix(const ExperimentConfig& base,
                                   const AblationAxes& axes,
                                   const std::vector<std::uint64_t>& seeds);

std::string ablation_report_to_json(const AblationReport& report);

}  // namespace poseunion
