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

#include "poseunion/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "json_detail.hpp"
#include "poseunion/errors.hpp"
#include "poseunion/io_util.hpp"
#include "poseunion/rng.hpp"

namespace poseunion {

using nlohmann::json;

void ExperimentConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (epochs == 0) throw ConfigError("epochs must be >= 1");
  if (model.d_in != generator.latent_dim) {
    throw ConfigError("model d_in (" + std::to_string(model.d_in) +
                      ") must equal generator latent_dim (" +
                      std::to_string(generator.latent_dim) + ")");
  }
  if (train_count_a + train_count_b == 0) {
    throw ConfigError("at least one training instance is required");
  }
  if (!(optimizer.base_lr > 0.0)) throw ConfigError("base_lr must be > 0");
  if (optimizer.momentum < 0.0 || optimizer.momentum >= 1.0) {
    throw ConfigError("momentum must be in [0, 1)");
  }
  if (optimizer.warmup_frac < 0.0 || optimizer.warmup_frac >= 1.0) {
    throw ConfigError("warmup_frac must be in [0, 1)");
  }
  loss.weights.validate();
  if (distill) {
    if (teachers.empty()) {
      throw ConfigError("distill=true needs at least one teacher");
    }
    for (const auto& t : teachers) {
      if (!loss.weights.betas.contains(t.id)) {
        throw ConfigError("teacher \"" + t.id + "\" has no beta weight");
      }
    }
  }
}

ExperimentConfig default_experiment_config() {
  ExperimentConfig config;
  config.loss.weights.alpha = 0.30;
  config.loss.weights.betas = {{"mpii", 0.25}, {"coco", 0.45}};
  config.teachers = {
      {"mpii", "mpii16", 1.5, 0.0},
      {"coco", "coco17", 1.5, 0.0},
  };
  return config;
}

ExperimentConfig parse_experiment_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw FormatError("experiment config parse failed at byte " +
                      std::to_string(e.byte) + ": " + e.what());
  }
  ExperimentConfig config = default_experiment_config();
  config.schema_a = doc.value("schema_a", config.schema_a);
  config.schema_b = doc.value("schema_b", config.schema_b);
  config.train_count_a = doc.value("train_count_a", config.train_count_a);
  config.train_count_b = doc.value("train_count_b", config.train_count_b);
  config.eval_count_a = doc.value("eval_count_a", config.eval_count_a);
  config.eval_count_b = doc.value("eval_count_b", config.eval_count_b);
  config.epochs = doc.value("epochs", config.epochs);
  config.batch_size = doc.value("batch_size", config.batch_size);
  config.seed = doc.value("seed", config.seed);
  config.distill = doc.value("distill", config.distill);
  config.eval_every = doc.value("eval_every", config.eval_every);

  if (doc.contains("loss")) {
    config.loss = parse_loss_config(doc.at("loss").dump());
  }
  if (doc.contains("model")) {
    const auto& m = doc.at("model");
    config.model.d_in = m.value("d_in", config.model.d_in);
    config.model.hidden = m.value("hidden", config.model.hidden);
  }
  if (doc.contains("optimizer")) {
    const auto& o = doc.at("optimizer");
    config.optimizer.base_lr = o.value("base_lr", config.optimizer.base_lr);
    config.optimizer.min_lr = o.value("min_lr", config.optimizer.min_lr);
    config.optimizer.warmup_frac =
        o.value("warmup_frac", config.optimizer.warmup_frac);
    config.optimizer.momentum = o.value("momentum", config.optimizer.momentum);
  }
  if (doc.contains("generator")) {
    const auto& g = doc.at("generator");
    config.generator.latent_dim =
        g.value("latent_dim", config.generator.latent_dim);
    config.generator.map_seed = g.value("map_seed", config.generator.map_seed);
    config.generator.lin_scale =
        g.value("lin_scale", config.generator.lin_scale);
    config.generator.warp_amplitude =
        g.value("warp_amplitude", config.generator.warp_amplitude);
    config.generator.label_noise =
        g.value("label_noise", config.generator.label_noise);
  }
  if (doc.contains("teachers")) {
    config.teachers.clear();
    for (const auto& t : doc.at("teachers")) {
      TeacherConfig tc;
      tc.id = t.at("id").get<std::string>();
      tc.schema = t.at("schema").get<std::string>();
      tc.concentration = t.value("concentration", tc.concentration);
      tc.noise = t.value("noise", tc.noise);
      config.teachers.push_back(std::move(tc));
    }
  }
  config.validate();
  return config;
}

std::string write_experiment_config(const ExperimentConfig& config) {
  json teachers = json::array();
  for (const auto& t : config.teachers) {
    teachers.push_back({{"id", t.id},
                        {"schema", t.schema},
                        {"concentration", t.concentration},
                        {"noise", t.noise}});
  }
  const json doc = {
      {"schema_a", config.schema_a},
      {"schema_b", config.schema_b},
      {"train_count_a", config.train_count_a},
      {"train_count_b", config.train_count_b},
      {"eval_count_a", config.eval_count_a},
      {"eval_count_b", config.eval_count_b},
      {"epochs", config.epochs},
      {"batch_size", config.batch_size},
      {"seed", config.seed},
      {"distill", config.distill},
      {"eval_every", config.eval_every},
      {"loss", json::parse(write_loss_config(config.loss))},
      {"model",
       {{"d_in", config.model.d_in}, {"hidden", config.model.hidden}}},
      {"optimizer",
       {{"base_lr", config.optimizer.base_lr},
        {"min_lr", config.optimizer.min_lr},
        {"warmup_frac", config.optimizer.warmup_frac},
        {"momentum", config.optimizer.momentum}}},
      {"generator",
       {{"latent_dim", config.generator.latent_dim},
        {"map_seed", config.generator.map_seed},
        {"lin_scale", config.generator.lin_scale},
        {"warp_amplitude", config.generator.warp_amplitude},
        {"label_noise", config.generator.label_noise}}},
      {"teachers", std::move(teachers)},
  };
  return doc.dump();
}

std::string experiment_config_digest(const ExperimentConfig& config) {
  return fnv1a64_hex(write_experiment_config(config));
}

ExperimentData generate_experiment_data(const ExperimentConfig& config) {
  config.validate();
  auto registry = SchemaRegistry::builtin();
  const SkeletonSchema schema_a = registry.resolve(config.schema_a);
  const SkeletonSchema schema_b = registry.resolve(config.schema_b);
  UnionSchema u = build_union({schema_a, schema_b});

  const auto& gen = config.generator;
  const std::uint64_t seed = config.seed;
  auto train_a = generate_dataset(gen, config.train_count_a, schema_a, u,
                                  mix_seed(seed, "train_a"), 0);
  auto train_b = generate_dataset(gen, config.train_count_b, schema_b, u,
                                  mix_seed(seed, "train_b"), 1000000);
  auto eval_a = generate_dataset(gen, config.eval_count_a, schema_a, u,
                                 mix_seed(seed, "eval_a"), 2000000);
  auto eval_b = generate_dataset(gen, config.eval_count_b, schema_b, u,
                                 mix_seed(seed, "eval_b"), 3000000);
  return ExperimentData{std::move(u),      schema_a,
                        schema_b,          std::move(train_a),
                        std::move(train_b), std::move(eval_a),
                        std::move(eval_b)};
}

std::vector<UnifiedInstance> predict_instances(const StudentModel& model,
                                               const SyntheticDataset& data,
                                               double temperature) {
  std::vector<UnifiedInstance> out;
  const auto n = static_cast<std::size_t>(data.latents.cols());
  out.reserve(n);
  if (n == 0) return out;
  const auto cache = forward_batch(model, data.latents);
  for (std::size_t i = 0; i < n; ++i) {
    const auto pred =
        prediction_from_column(model, cache.logits, i, temperature);
    UnifiedInstance inst = make_unified(model.keypoints);
    inst.image_id = data.instances[i].image_id;
    inst.bbox = data.instances[i].bbox;
    inst.area = data.instances[i].area;
    double confidence = 0.0;
    for (std::size_t k = 0; k < model.keypoints; ++k) {
      inst.coords[k] = pred.coords[k];
      inst.mask[k] = true;
      inst.vis[k] = 2;
      const auto& d = pred.dists[k];
      confidence +=
          0.5 * (*std::max_element(d.x_probs.begin(), d.x_probs.end()) +
                 *std::max_element(d.y_probs.begin(), d.y_probs.end()));
    }
    inst.score = confidence / static_cast<double>(model.keypoints);
    out.push_back(std::move(inst));
  }
  return out;
}

ExperimentEval evaluate_experiment(const StudentModel& model,
                                   const ExperimentData& data,
                                   const ExperimentConfig& config) {
  const double tau = config.loss.temperature;
  const auto preds_a = predict_instances(model, data.eval_a, tau);
  const auto preds_b = predict_instances(model, data.eval_b, tau);
  const auto all_slots = subset_slots(data.u, "all");

  ExperimentEval eval;
  PckConfig pckh{0.5, PckNormalizer::head_segment, 0.6};
  eval.a_pckh = pck(preds_a, data.eval_a.instances, data.u, pckh, all_slots);
  pckh.threshold = 0.1;
  eval.a_pckh01 = pck(preds_a, data.eval_a.instances, data.u, pckh, all_slots);

  eval.b_ap = average_precision(preds_b, data.eval_b.instances,
                                default_sigmas(data.u), oks_thresholds(),
                                all_slots);

  std::vector<UnifiedInstance> full_preds = preds_a;
  full_preds.insert(full_preds.end(), preds_b.begin(), preds_b.end());
  std::vector<UnifiedInstance> full_gts = data.eval_a.full_truth;
  full_gts.insert(full_gts.end(), data.eval_b.full_truth.begin(),
                  data.eval_b.full_truth.end());

  PckConfig diag{0.5, PckNormalizer::bbox_diag, 0.6};
  eval.full_pck = pck(full_preds, full_gts, data.u, diag, all_slots);
  diag.threshold = 0.1;
  eval.full_pck01 = pck(full_preds, full_gts, data.u, diag, all_slots);
  return eval;
}

namespace {

json experiment_eval_json(const ExperimentEval& eval) {
  return {
      {"a_pckh", detail::eval_report_json(eval.a_pckh)},
      {"a_pckh01", detail::eval_report_json(eval.a_pckh01)},
      {"b_ap", detail::eval_report_json(eval.b_ap)},
      {"full_pck", detail::eval_report_json(eval.full_pck)},
      {"full_pck01", detail::eval_report_json(eval.full_pck01)},
  };
}

ExperimentEval experiment_eval_from_json(const json& doc) {
  ExperimentEval eval;
  eval.a_pckh = detail::eval_report_from_json(doc.at("a_pckh"));
  eval.a_pckh01 = detail::eval_report_from_json(doc.at("a_pckh01"));
  eval.b_ap = detail::eval_report_from_json(doc.at("b_ap"));
  eval.full_pck = detail::eval_report_from_json(doc.at("full_pck"));
  eval.full_pck01 = detail::eval_report_from_json(doc.at("full_pck01"));
  return eval;
}

json run_log_json(const RunLog& log, bool with_timing) {
  json steps = json::array();
  for (const auto& s : log.steps) {
    steps.push_back({{"epoch", s.epoch},
                     {"step", s.step},
                     {"lr", s.lr},
                     {"total", s.total},
                     {"ck", s.ck},
                     {"kl", s.kl}});
  }
  json epochs = json::array();
  for (const auto& e : log.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"total", e.total},
                      {"ck", e.ck},
                      {"kl", e.kl}});
  }
  json snapshots = json::array();
  for (const auto& s : log.snapshots) {
    snapshots.push_back(
        {{"epoch", s.epoch}, {"eval", experiment_eval_json(s.eval)}});
  }
  json doc = {
      {"config_digest", log.config_digest},
      {"config", json::parse(log.config_json)},
      {"steps", std::move(steps)},
      {"epochs", std::move(epochs)},
      {"snapshots", std::move(snapshots)},
      {"final_eval", experiment_eval_json(log.final_eval)},
  };
  if (with_timing) {
    doc["timing"] = {{"wall_seconds", log.wall_seconds}};
  }
  return doc;
}

}  // namespace

std::string run_log_to_json(const RunLog& log) {
  return run_log_json(log, true).dump();
}

std::string deterministic_run_log_json(const RunLog& log) {
  return run_log_json(log, false).dump();
}

RunLog parse_run_log(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw FormatError("run log parse failed at byte " + std::to_string(e.byte) +
                      ": " + e.what());
  }
  try {
    RunLog log;
    log.config_digest = doc.at("config_digest").get<std::string>();
    log.config_json = doc.at("config").dump();
    for (const auto& s : doc.at("steps")) {
      StepRecord rec;
      rec.epoch = s.at("epoch").get<std::size_t>();
      rec.step = s.at("step").get<std::size_t>();
      rec.lr = s.at("lr").get<double>();
      rec.total = s.at("total").get<double>();
      rec.ck = s.at("ck").get<double>();
      rec.kl = s.at("kl").get<std::map<std::string, double>>();
      log.steps.push_back(std::move(rec));
    }
    for (const auto& e : doc.at("epochs")) {
      EpochRecord rec;
      rec.epoch = e.at("epoch").get<std::size_t>();
      rec.total = e.at("total").get<double>();
      rec.ck = e.at("ck").get<double>();
      rec.kl = e.at("kl").get<std::map<std::string, double>>();
      log.epochs.push_back(std::move(rec));
    }
    for (const auto& s : doc.at("snapshots")) {
      log.snapshots.push_back({s.at("epoch").get<std::size_t>(),
                               experiment_eval_from_json(s.at("eval"))});
    }
    log.final_eval = experiment_eval_from_json(doc.at("final_eval"));
    if (doc.contains("timing")) {
      log.wall_seconds = doc.at("timing").value("wall_seconds", 0.0);
    }
    return log;
  } catch (const json::exception& e) {
    throw FormatError(std::string("run log fields invalid: ") + e.what());
  }
}

std::string experiment_eval_to_json(const ExperimentEval& eval) {
  return experiment_eval_json(eval).dump();
}

TrainResult train(const ExperimentConfig& config) {
  return train_on(config, generate_experiment_data(config));
}

TrainResult train_on(const ExperimentConfig& config,
                     const ExperimentData& data) {
  config.validate();
  const auto start_time = std::chrono::steady_clock::now();

  const std::size_t n_a = data.train_a.instances.size();
  const std::size_t n_b = data.train_b.instances.size();
  const std::size_t n_total = n_a + n_b;
  if (n_total == 0) throw ConfigError("no training instances");
  const std::size_t union_size = data.u.size();

  // Teachers anchored on the hidden full truth; every teacher predicts on
  // every instance regardless of its source dataset.
  std::vector<TeacherOracle> oracles;
  if (config.distill) {
    auto registry = SchemaRegistry::builtin();
    for (const auto& tc : config.teachers) {
      TeacherOracle oracle;
      oracle.teacher_id = tc.id;
      oracle.covered =
          mapping_into(registry.resolve(tc.schema), data.u).index_map;
      oracle.concentration = tc.concentration;
      oracle.noise = tc.noise;
      oracle.seed = mix_seed(config.seed, "teacher:" + tc.id);
      oracle.validate(union_size);
      oracles.push_back(std::move(oracle));
    }
  }
  const LossWeights weights =
      config.distill ? config.loss.weights : LossWeights{1.0, {}};

  auto truth_of = [&](std::size_t i) -> const UnifiedInstance& {
    return i < n_a ? data.train_a.full_truth[i]
                   : data.train_b.full_truth[i - n_a];
  };
  auto public_of = [&](std::size_t i) -> const UnifiedInstance& {
    return i < n_a ? data.train_a.instances[i]
                   : data.train_b.instances[i - n_a];
  };
  auto latent_of = [&](std::size_t i) {
    return i < n_a
               ? data.train_a.latents.col(static_cast<Eigen::Index>(i))
               : data.train_b.latents.col(static_cast<Eigen::Index>(i - n_a));
  };

  std::vector<std::vector<TeacherPrediction>> teacher_preds(n_total);
  for (std::size_t i = 0; i < n_total; ++i) {
    for (const auto& oracle : oracles) {
      teacher_preds[i].push_back(
          teacher_predict(oracle, truth_of(i), config.loss.bins));
    }
  }

  TrainState state = make_train_state(
      init_student(config.model.d_in, config.model.hidden, union_size,
                   config.loss.bins, mix_seed(config.seed, "model_init")));

  const std::size_t steps_per_epoch =
      (n_total + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = steps_per_epoch * config.epochs;
  LrSchedule schedule;
  schedule.base_lr = config.optimizer.base_lr;
  schedule.min_lr = config.optimizer.min_lr;
  schedule.total_steps = total_steps;
  schedule.warmup_steps =
      std::min(static_cast<std::size_t>(std::llround(
                   config.optimizer.warmup_frac *
                   static_cast<double>(total_steps))),
               total_steps - 1);

  RunLog log;
  log.config_json = write_experiment_config(config);
  log.config_digest = fnv1a64_hex(log.config_json);

  std::vector<std::size_t> order(n_total);
  std::iota(order.begin(), order.end(), std::size_t{0});

  const double tau = config.loss.temperature;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle_rng(mix_seed(mix_seed(config.seed, "shuffle"),
                             static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double epoch_total = 0.0;
    double epoch_ck = 0.0;
    std::map<std::string, double> epoch_kl;
    for (const auto& oracle : oracles) epoch_kl[oracle.teacher_id] = 0.0;

    for (std::size_t start = 0; start < n_total;
         start += config.batch_size) {
      const std::size_t bn = std::min(config.batch_size, n_total - start);
      Eigen::MatrixXd Z(static_cast<Eigen::Index>(config.model.d_in),
                        static_cast<Eigen::Index>(bn));
      for (std::size_t j = 0; j < bn; ++j) {
        Z.col(static_cast<Eigen::Index>(j)) = latent_of(order[start + j]);
      }
      const auto cache = forward_batch(state.params, Z);

      Eigen::MatrixXd U(cache.logits.rows(), cache.logits.cols());
      double batch_total = 0.0;
      double batch_ck = 0.0;
      std::map<std::string, double> batch_kl;
      for (const auto& oracle : oracles) batch_kl[oracle.teacher_id] = 0.0;

      const double inv_bn = 1.0 / static_cast<double>(bn);
      for (std::size_t j = 0; j < bn; ++j) {
        const std::size_t idx = order[start + j];
        const auto pred =
            prediction_from_column(state.params, cache.logits, j, tau);
        const auto tl = total_loss(pred, public_of(idx), teacher_preds[idx],
                                   weights, config.loss.kl_direction);
        batch_total += tl.value;
        batch_ck += tl.ck_value;
        for (const auto& [id, v] : tl.kl_values) batch_kl[id] += v;
        for (std::size_t i = 0; i < tl.grad_logits.size(); ++i) {
          U(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
              tl.grad_logits[i] * inv_bn;
        }
      }
      batch_total *= inv_bn;
      batch_ck *= inv_bn;
      for (auto& [id, v] : batch_kl) v *= inv_bn;

      if (!std::isfinite(batch_total)) {
        throw ContractError(
            "training diverged at epoch " + std::to_string(epoch) +
            ", step " + std::to_string(state.step) +
            " (batch starting at shuffled index " + std::to_string(start) +
            ")");
      }

      const auto grads = backward_batch(state.params, cache, U);
      sgd_step(state, grads, schedule, config.optimizer.momentum);

      StepRecord rec;
      rec.epoch = epoch;
      rec.step = state.step - 1;
      rec.lr = state.lr;
      rec.total = batch_total;
      rec.ck = batch_ck;
      rec.kl = batch_kl;
      log.steps.push_back(std::move(rec));

      const double bw = static_cast<double>(bn);
      epoch_total += batch_total * bw;
      epoch_ck += batch_ck * bw;
      for (const auto& [id, v] : batch_kl) epoch_kl[id] += v * bw;
    }

    EpochRecord erec;
    erec.epoch = epoch;
    erec.total = epoch_total / static_cast<double>(n_total);
    erec.ck = epoch_ck / static_cast<double>(n_total);
    for (const auto& [id, v] : epoch_kl) {
      erec.kl[id] = v / static_cast<double>(n_total);
    }
    log.epochs.push_back(std::move(erec));

    if (config.eval_every > 0 && (epoch + 1) % config.eval_every == 0) {
      log.snapshots.push_back(
          {epoch, evaluate_experiment(state.params, data, config)});
    }
  }

  log.final_eval = evaluate_experiment(state.params, data, config);
  log.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                    start_time)
          .count();
  return TrainResult{std::move(state), std::move(log)};
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  const double mean =
      std::accumulate(values.begin(), values.end(), 0.0) /
      static_cast<double>(values.size());
  double var = 0.0;
  for (const double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  return {mean, std::sqrt(var)};
}

double report_mean(const EvalReport& report, const char* key) {
  const auto it = report.means.find(key);
  return it == report.means.end() ? 0.0 : it->second;
}

}  // namespace

AblationReport run_ablation_matrix(const ExperimentConfig& base,
                                   const AblationAxes& axes,
                                   const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw ConfigError("ablation needs at least one seed");
  const std::vector<bool> distill_axis =
      axes.distill.empty() ? std::vector<bool>{base.distill} : axes.distill;
  const std::vector<double> alpha_axis =
      axes.alphas.empty() ? std::vector<double>{base.loss.weights.alpha}
                          : axes.alphas;
  const std::vector<std::map<std::string, double>> beta_axis =
      axes.beta_sets.empty()
          ? std::vector<std::map<std::string, double>>{base.loss.weights.betas}
          : axes.beta_sets;

  AblationReport report;
  for (const bool distill : distill_axis) {
    for (const double alpha : alpha_axis) {
      for (const auto& betas : beta_axis) {
        AblationCell cell;
        cell.distill = distill;
        cell.alpha = alpha;
        cell.betas = betas;
        std::vector<double> full01;
        std::vector<double> a_pckh;
        std::vector<double> b_ap;
        for (const std::uint64_t seed : seeds) {
          ExperimentConfig config = base;
          config.distill = distill;
          config.loss.weights.alpha = alpha;
          config.loss.weights.betas = betas;
          config.seed = seed;
          cell.seeds.push_back(seed);
          try {
            auto result = train(config);
            full01.push_back(
                report_mean(result.log.final_eval.full_pck01, "pck"));
            a_pckh.push_back(report_mean(result.log.final_eval.a_pckh, "pck"));
            b_ap.push_back(report_mean(result.log.final_eval.b_ap, "ap"));
            cell.evals.push_back(result.log.final_eval);
            cell.errors.emplace_back();
            cell.logs.push_back(std::move(result.log));
          } catch (const Error& e) {
            cell.evals.emplace_back();
            cell.errors.emplace_back(e.what());
            cell.logs.emplace_back();
          }
        }
        if (!full01.empty()) {
          cell.aggregates["full_pck01"] = mean_std(full01);
          cell.aggregates["a_pckh"] = mean_std(a_pckh);
          cell.aggregates["b_ap"] = mean_std(b_ap);
        }
        report.cells.push_back(std::move(cell));
      }
    }
  }
  return report;
}

std::string ablation_report_to_json(const AblationReport& report) {
  json cells = json::array();
  for (const auto& cell : report.cells) {
    json runs = json::array();
    for (std::size_t i = 0; i < cell.seeds.size(); ++i) {
      json run = {{"seed", cell.seeds[i]}};
      if (!cell.errors[i].empty()) {
        run["error"] = cell.errors[i];
      } else {
        run["eval"] = json::parse(experiment_eval_to_json(cell.evals[i]));
      }
      runs.push_back(std::move(run));
    }
    json aggregates;
    for (const auto& [key, stats] : cell.aggregates) {
      aggregates[key] = {{"mean", stats.first}, {"std", stats.second}};
    }
    cells.push_back({{"distill", cell.distill},
                     {"alpha", cell.alpha},
                     {"betas", cell.betas},
                     {"runs", std::move(runs)},
                     {"aggregates", std::move(aggregates)}});
  }
  return json{{"cells", std::move(cells)}}.dump();
}

}  // namespace poseunion
