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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include <json.hpp>

#include "poseunion/errors.hpp"
#include "poseunion/experiment.hpp"

using namespace poseunion;
using nlohmann::json;

namespace {

/// Small enough to train in well under a second.
ExperimentConfig tiny_config() {
  auto cfg = default_experiment_config();
  cfg.train_count_a = 12;
  cfg.train_count_b = 12;
  cfg.eval_count_a = 6;
  cfg.eval_count_b = 6;
  cfg.epochs = 3;
  cfg.batch_size = 5;
  cfg.model.d_in = 8;
  cfg.model.hidden = 16;
  cfg.loss.bins = 16;
  cfg.generator.latent_dim = 8;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("default config validates and round trips") {
  const auto cfg = default_experiment_config();
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.loss.weights.alpha == doctest::Approx(0.30));
  CHECK(cfg.loss.weights.betas.at("mpii") == doctest::Approx(0.25));
  CHECK(cfg.loss.weights.betas.at("coco") == doctest::Approx(0.45));
  REQUIRE(cfg.teachers.size() == 2);
  CHECK(cfg.teachers[0].schema == "mpii16");
  CHECK(cfg.teachers[1].schema == "coco17");

  const auto text = write_experiment_config(cfg);
  const auto back = parse_experiment_config(text);
  CHECK(write_experiment_config(back) == text);
  CHECK(experiment_config_digest(back) == experiment_config_digest(cfg));
  CHECK(experiment_config_digest(cfg).size() == 16);
}

TEST_CASE("config digest tracks content") {
  auto a = default_experiment_config();
  auto b = a;
  b.seed = a.seed + 1;
  CHECK(experiment_config_digest(a) != experiment_config_digest(b));
}

TEST_CASE("partial json fills defaults") {
  const auto cfg = parse_experiment_config(R"({"epochs": 7, "seed": 3})");
  CHECK(cfg.epochs == 7);
  CHECK(cfg.seed == 3);
  CHECK(cfg.schema_a == "mpii16");
  CHECK(cfg.batch_size == default_experiment_config().batch_size);
  CHECK_THROWS_AS(parse_experiment_config("{"), FormatError);
}

TEST_CASE("config validation rejects inconsistencies") {
  auto cfg = tiny_config();
  SUBCASE("zero epochs") {
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("latent and input width disagree") {
    cfg.model.d_in = cfg.generator.latent_dim + 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("distillation without teachers") {
    cfg.teachers.clear();
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("teacher missing a beta") {
    cfg.teachers.push_back({"extra", "coco17", 1.5, 0.0});
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("bad momentum") {
    cfg.optimizer.momentum = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("no distillation needs no teachers") {
    cfg.distill = false;
    cfg.teachers.clear();
    CHECK_NOTHROW(cfg.validate());
  }
}

TEST_CASE("experiment data has the expected shape") {
  const auto cfg = tiny_config();
  const auto data = generate_experiment_data(cfg);
  CHECK(data.u.size() == 21);
  // Dataset A's schema leads the union; COCO face points take the tail.
  CHECK(data.u.keypoints[0].str() == "right_ankle");
  CHECK(data.u.keypoints[16].str() == "nose");
  CHECK(data.u.keypoints[20].str() == "right_ear");
  CHECK(data.train_a.instances.size() == cfg.train_count_a);
  CHECK(data.train_b.instances.size() == cfg.train_count_b);
  CHECK(data.eval_a.instances.size() == cfg.eval_count_a);
  CHECK(data.eval_b.instances.size() == cfg.eval_count_b);

  // Image ids never collide across the four splits.
  std::set<std::int64_t> ids;
  for (const auto* split :
       {&data.train_a, &data.train_b, &data.eval_a, &data.eval_b}) {
    for (const auto& inst : split->instances) ids.insert(inst.image_id);
  }
  CHECK(ids.size() == cfg.train_count_a + cfg.train_count_b +
                          cfg.eval_count_a + cfg.eval_count_b);

  // A-split public labels cover exactly the MPII slots.
  const auto mpii_map = mapping_into(data.schema_a, data.u).index_map;
  const std::set<std::size_t> mpii_slots(mpii_map.begin(), mpii_map.end());
  for (std::size_t k = 0; k < data.u.size(); ++k) {
    CHECK(data.train_a.instances[0].mask[k] == mpii_slots.contains(k));
  }
}

TEST_CASE("training produces the documented step count and finite losses") {
  const auto cfg = tiny_config();
  const auto result = train(cfg);

  const std::size_t steps_per_epoch =
      (cfg.train_count_a + cfg.train_count_b + cfg.batch_size - 1) /
      cfg.batch_size;
  CHECK(result.log.steps.size() == cfg.epochs * steps_per_epoch);
  CHECK(result.log.epochs.size() == cfg.epochs);
  CHECK(result.log.config_digest == experiment_config_digest(cfg));

  for (const auto& s : result.log.steps) {
    CHECK(std::isfinite(s.total));
    CHECK(std::isfinite(s.ck));
    CHECK(s.lr > 0.0);
    CHECK(s.kl.contains("mpii"));
    CHECK(s.kl.contains("coco"));
  }
  // Loss goes down over the run.
  CHECK(result.log.epochs.back().total < result.log.epochs.front().total);
  CHECK(result.state.step == result.log.steps.size());
  CHECK(result.state.params.finite());

  // Final eval carries all five reports.
  CHECK(result.log.final_eval.a_pckh.means.contains("pck"));
  CHECK(result.log.final_eval.full_pck.means.contains("pck"));
  CHECK(result.log.final_eval.b_ap.means.contains("ap"));
}

TEST_CASE("every step satisfies the weighted-total identity") {
  const auto cfg = tiny_config();
  const auto result = train(cfg);
  const double alpha = cfg.loss.weights.alpha;
  for (const auto& s : result.log.steps) {
    double expect = alpha * s.ck;
    for (const auto& [id, kl] : s.kl) {
      expect += (1.0 - alpha) * cfg.loss.weights.betas.at(id) * kl;
    }
    CHECK(s.total == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("disabling distillation drops the kl terms") {
  auto cfg = tiny_config();
  cfg.distill = false;
  const auto result = train(cfg);
  for (const auto& s : result.log.steps) {
    CHECK(s.kl.empty());
    CHECK(s.total == doctest::Approx(s.ck).epsilon(1e-12));
  }
}

TEST_CASE("training is deterministic byte for byte") {
  const auto cfg = tiny_config();
  const auto a = train(cfg);
  const auto b = train(cfg);
  CHECK(deterministic_run_log_json(a.log) == deterministic_run_log_json(b.log));
  CHECK(serialize_checkpoint(a.state, a.log.config_digest) ==
        serialize_checkpoint(b.state, b.log.config_digest));

  auto other = cfg;
  other.seed = cfg.seed + 1;
  const auto c = train(other);
  CHECK(deterministic_run_log_json(a.log) != deterministic_run_log_json(c.log));
}

TEST_CASE("run log json round trips and isolates timing") {
  auto cfg = tiny_config();
  cfg.eval_every = 2;
  const auto result = train(cfg);
  REQUIRE(result.log.snapshots.size() == 1);  // after the second of 3 epochs
  CHECK(result.log.snapshots[0].epoch == 1);  // 0-based, matching steps

  const auto text = run_log_to_json(result.log);
  const auto back = parse_run_log(text);
  CHECK(back.config_digest == result.log.config_digest);
  CHECK(back.steps.size() == result.log.steps.size());
  CHECK(back.steps.back().total ==
        doctest::Approx(result.log.steps.back().total));
  CHECK(back.snapshots.size() == 1);
  CHECK(back.wall_seconds == result.log.wall_seconds);

  const auto doc = json::parse(text);
  CHECK(doc.contains("timing"));
  CHECK(doc.at("timing").contains("wall_seconds"));
  const auto det = json::parse(deterministic_run_log_json(result.log));
  CHECK_FALSE(det.contains("timing"));
  // The deterministic view is the full view minus timing.
  auto full = doc;
  full.erase("timing");
  CHECK(full == det);

  CHECK_THROWS_AS(parse_run_log("[]"), FormatError);
}

TEST_CASE("experiment eval json carries all five reports") {
  const auto cfg = tiny_config();
  const auto result = train(cfg);
  const auto doc = json::parse(experiment_eval_to_json(result.log.final_eval));
  for (const char* key :
       {"a_pckh", "a_pckh01", "b_ap", "full_pck", "full_pck01"}) {
    CHECK(doc.contains(key));
    CHECK(doc.at(key).contains("means"));
  }
}

TEST_CASE("predictions cover every slot with sane scores") {
  const auto cfg = tiny_config();
  const auto data = generate_experiment_data(cfg);
  const auto model = init_student(cfg.model.d_in, cfg.model.hidden, 21,
                                  cfg.loss.bins, 3);
  const auto preds = predict_instances(model, data.eval_a,
                                       cfg.loss.temperature);
  REQUIRE(preds.size() == data.eval_a.instances.size());
  for (const auto& p : preds) {
    CHECK(p.labeled_count() == 21);
    CHECK(p.score > 0.0);
    CHECK(p.score <= 1.0);
    for (std::size_t k = 0; k < 21; ++k) {
      CHECK(p.coords[k].x >= 0.0);
      CHECK(p.coords[k].x <= 1.0);
    }
  }
}

TEST_CASE("ablation matrix records failures and keeps going") {
  auto base = tiny_config();
  base.epochs = 2;
  AblationAxes axes;
  axes.distill = {false, true};

  const auto report = run_ablation_matrix(base, axes, {1, 2});
  REQUIRE(report.cells.size() == 2);
  for (const auto& cell : report.cells) {
    CHECK(cell.seeds == std::vector<std::uint64_t>{1, 2});
    REQUIRE(cell.evals.size() == 2);
    REQUIRE(cell.errors.size() == 2);
    CHECK(cell.errors[0].empty());
    CHECK(cell.errors[1].empty());
    CHECK(cell.aggregates.contains("full_pck01"));
    CHECK(cell.aggregates.contains("a_pckh"));
    const auto& [mean, std_dev] = cell.aggregates.at("full_pck01");
    CHECK(std::isfinite(mean));
    CHECK(std_dev >= 0.0);
  }
  CHECK(report.cells[0].distill == false);
  CHECK(report.cells[1].distill == true);

  // A broken teacher schema fails that cell's runs without aborting.
  auto bad = base;
  bad.teachers[0].schema = "nope";
  const auto failed = run_ablation_matrix(bad, AblationAxes{}, {1});
  REQUIRE(failed.cells.size() == 1);
  REQUIRE(failed.cells[0].errors.size() == 1);
  CHECK_FALSE(failed.cells[0].errors[0].empty());
  CHECK(failed.cells[0].aggregates.empty());

  const auto doc = json::parse(ablation_report_to_json(report));
  REQUIRE(doc.at("cells").size() == 2);
  CHECK(doc.at("cells")[0].at("runs").size() == 2);
  CHECK(doc.at("cells")[0].at("aggregates").contains("full_pck01"));
}

TEST_CASE("ablation axes default to the base config") {
  auto base = tiny_config();
  base.epochs = 1;
  const auto report = run_ablation_matrix(base, AblationAxes{}, {base.seed});
  REQUIRE(report.cells.size() == 1);
  CHECK(report.cells[0].distill == base.distill);
  CHECK(report.cells[0].alpha == base.loss.weights.alpha);
  CHECK(report.cells[0].betas == base.loss.weights.betas);
}
