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

// Microbenchmarks for the hot paths: loss kernels, the student model, and
// the evaluation pipeline. These guard against accidental O(K * B) ->
// O(K * B^2) style regressions; absolute numbers are machine-dependent.

#include <benchmark/benchmark.h>

#include <vector>

#include "poseunion/experiment.hpp"
#include "poseunion/losses.hpp"
#include "poseunion/metrics.hpp"
#include "poseunion/model.hpp"
#include "poseunion/rng.hpp"
#include "poseunion/schema.hpp"

namespace {

using namespace poseunion;

constexpr std::size_t kKeypoints = 21;
constexpr std::size_t kBins = 64;

UnionSchema standard_union() {
  const auto reg = SchemaRegistry::builtin();
  return build_union({reg.get("coco17"), reg.get("mpii16")});
}

std::vector<double> random_logits(Rng& rng, std::size_t n) {
  std::vector<double> out(n);
  for (auto& v : out) v = rng.uniform(-3, 3);
  return out;
}

UnifiedInstance random_gt(Rng& rng, std::size_t size) {
  auto gt = make_unified(size);
  gt.area = 5000.0;
  gt.bbox = {0, 0, 100, 100};
  for (std::size_t k = 0; k < size; ++k) {
    gt.mask[k] = true;
    gt.vis[k] = 2;
    gt.coords[k] = {rng.uniform01(), rng.uniform01()};
  }
  return gt;
}

void BM_BuildUnion(benchmark::State& state) {
  const auto reg = SchemaRegistry::builtin();
  const auto& coco = reg.get("coco17");
  const auto& mpii = reg.get("mpii16");
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_union({coco, mpii}));
  }
}
BENCHMARK(BM_BuildUnion);

void BM_MakePrediction(benchmark::State& state) {
  Rng rng(1);
  const auto logits = random_logits(rng, kKeypoints * 2 * kBins);
  for (auto _ : state) {
    benchmark::DoNotOptimize(make_prediction(logits, kKeypoints, kBins, 2.0));
  }
}
BENCHMARK(BM_MakePrediction);

void BM_SoftArgmax(benchmark::State& state) {
  Rng rng(2);
  const auto pred =
      make_prediction(random_logits(rng, 2 * kBins), 1, kBins, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(soft_argmax_decode(pred.dists[0], 1.0));
  }
}
BENCHMARK(BM_SoftArgmax);

void BM_CkLoss(benchmark::State& state) {
  Rng rng(3);
  const auto pred = make_prediction(
      random_logits(rng, kKeypoints * 2 * kBins), kKeypoints, kBins, 1.0);
  const auto gt = random_gt(rng, kKeypoints);
  for (auto _ : state) {
    benchmark::DoNotOptimize(conditional_keypoint_loss(pred, gt));
  }
}
BENCHMARK(BM_CkLoss);

void BM_KlLoss(benchmark::State& state) {
  Rng rng(4);
  const auto pred = make_prediction(
      random_logits(rng, kKeypoints * 2 * kBins), kKeypoints, kBins, 1.0);
  TeacherPrediction teacher;
  teacher.teacher_id = "bench";
  for (std::size_t k = 0; k < 16; ++k) {
    teacher.covered.push_back(k);
    KeypointDistribution d;
    d.x_probs = softmax(random_logits(rng, kBins), 1.0);
    d.y_probs = softmax(random_logits(rng, kBins), 1.0);
    teacher.dists.push_back(std::move(d));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(kl_distill_loss(pred, teacher));
  }
}
BENCHMARK(BM_KlLoss);

void BM_TeacherPredict(benchmark::State& state) {
  Rng rng(5);
  const auto gt = random_gt(rng, kKeypoints);
  TeacherOracle oracle;
  oracle.teacher_id = "bench";
  for (std::size_t k = 0; k < 16; ++k) oracle.covered.push_back(k);
  oracle.concentration = 1.5;
  oracle.noise = 0.01;
  oracle.seed = 7;
  for (auto _ : state) {
    benchmark::DoNotOptimize(teacher_predict(oracle, gt, kBins));
  }
}
BENCHMARK(BM_TeacherPredict);

void BM_ModelForward(benchmark::State& state) {
  Rng rng(6);
  const auto model = init_student(32, 256, kKeypoints, kBins, 11);
  Eigen::VectorXd z(32);
  for (int i = 0; i < 32; ++i) z(i) = rng.uniform(-1, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(model, z, 2.0));
  }
}
BENCHMARK(BM_ModelForward);

void BM_ModelBackward(benchmark::State& state) {
  Rng rng(7);
  const auto model = init_student(32, 256, kKeypoints, kBins, 11);
  Eigen::MatrixXd z(32, 8);
  for (int c = 0; c < z.cols(); ++c) {
    for (int r = 0; r < z.rows(); ++r) z(r, c) = rng.uniform(-1, 1);
  }
  const auto cache = forward_batch(model, z);
  Eigen::MatrixXd upstream(kKeypoints * 2 * kBins, 8);
  for (int c = 0; c < upstream.cols(); ++c) {
    for (int r = 0; r < upstream.rows(); ++r) {
      upstream(r, c) = rng.uniform(-1, 1);
    }
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(backward_batch(model, cache, upstream));
  }
}
BENCHMARK(BM_ModelBackward);

void BM_Oks(benchmark::State& state) {
  Rng rng(8);
  const auto u = standard_union();
  const auto params = default_sigmas(u);
  const auto subset = subset_slots(u, "all");
  const auto gt = random_gt(rng, u.size());
  auto pred = gt;
  for (auto& c : pred.coords) {
    c.x += rng.uniform(-0.05, 0.05);
    c.y += rng.uniform(-0.05, 0.05);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(oks(pred, gt, params, subset));
  }
}
BENCHMARK(BM_Oks);

void BM_AveragePrecision(benchmark::State& state) {
  Rng rng(9);
  const auto u = standard_union();
  const auto params = default_sigmas(u);
  const auto thresholds = oks_thresholds();
  const auto subset = subset_slots(u, "all");
  std::vector<UnifiedInstance> gts;
  std::vector<UnifiedInstance> preds;
  for (int img = 0; img < 32; ++img) {
    for (int i = 0; i < 3; ++i) {
      auto gt = random_gt(rng, u.size());
      gt.image_id = img;
      auto pred = gt;
      pred.score = rng.uniform01();
      for (auto& c : pred.coords) {
        c.x += rng.uniform(-0.1, 0.1);
        c.y += rng.uniform(-0.1, 0.1);
      }
      gts.push_back(std::move(gt));
      preds.push_back(std::move(pred));
    }
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        average_precision(preds, gts, params, thresholds, subset));
  }
}
BENCHMARK(BM_AveragePrecision);

void BM_Pck(benchmark::State& state) {
  Rng rng(10);
  const auto u = standard_union();
  const auto subset = subset_slots(u, "all");
  PckConfig cfg;
  std::vector<UnifiedInstance> gts;
  std::vector<UnifiedInstance> preds;
  for (int i = 0; i < 128; ++i) {
    auto gt = random_gt(rng, u.size());
    gt.image_id = i;
    auto pred = gt;
    for (auto& c : pred.coords) {
      c.x += rng.uniform(-0.1, 0.1);
      c.y += rng.uniform(-0.1, 0.1);
    }
    gts.push_back(std::move(gt));
    preds.push_back(std::move(pred));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(pck(preds, gts, u, cfg, subset));
  }
}
BENCHMARK(BM_Pck);

void BM_TrainEpoch(benchmark::State& state) {
  auto cfg = default_experiment_config();
  cfg.train_count_a = 64;
  cfg.train_count_b = 64;
  cfg.eval_count_a = 8;
  cfg.eval_count_b = 8;
  cfg.epochs = 1;
  cfg.model.hidden = 64;
  for (auto _ : state) {
    benchmark::DoNotOptimize(train(cfg));
  }
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
