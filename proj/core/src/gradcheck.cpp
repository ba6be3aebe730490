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

#include "poseunion/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <json.hpp>

#include "poseunion/annotation.hpp"
#include "poseunion/errors.hpp"
#include "poseunion/losses.hpp"
#include "poseunion/model.hpp"
#include "poseunion/rng.hpp"

namespace poseunion {

namespace {

double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

/// Central difference d f / d x[i] through an arbitrary scalar function.
double central_diff(std::vector<double>& x, std::size_t i, double h,
                    const std::function<double(const std::vector<double>&)>& f) {
  const double saved = x[i];
  x[i] = saved + h;
  const double hi = f(x);
  x[i] = saved - h;
  const double lo = f(x);
  x[i] = saved;
  return (hi - lo) / (2.0 * h);
}

/// Compares one analytic gradient vector to central differences over the
/// same inputs, folding the worst component error into max_err. With
/// inject_fault the largest analytic component is negated first.
void check_vector(std::vector<double> analytic, std::vector<double>& inputs,
                  const std::function<double(const std::vector<double>&)>& f,
                  const GradcheckConfig& cfg, double& max_err) {
  if (cfg.inject_fault && !analytic.empty()) {
    std::size_t worst = 0;
    for (std::size_t i = 1; i < analytic.size(); ++i) {
      if (std::abs(analytic[i]) > std::abs(analytic[worst])) worst = i;
    }
    analytic[worst] = -analytic[worst];
  }
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double numeric = central_diff(inputs, i, cfg.step, f);
    max_err = std::max(max_err, rel_err(analytic[i], numeric));
  }
}

std::vector<double> random_logits(Rng& rng, std::size_t n) {
  std::vector<double> out(n);
  for (auto& v : out) v = rng.uniform(-2.0, 2.0);
  return out;
}

KeypointDistribution random_distribution(Rng& rng, std::size_t bins) {
  const auto lx = random_logits(rng, bins);
  const auto ly = random_logits(rng, bins);
  return KeypointDistribution{softmax(lx), softmax(ly)};
}

UnifiedInstance random_gt(Rng& rng, std::size_t keypoints) {
  UnifiedInstance gt = make_unified(keypoints);
  bool any = false;
  for (std::size_t k = 0; k < keypoints; ++k) {
    if (rng.uniform01() < 0.7) {
      gt.mask[k] = true;
      gt.vis[k] = 2;
      gt.coords[k] = Point2{rng.uniform01(), rng.uniform01()};
      any = true;
    }
  }
  if (!any) {
    gt.mask[0] = true;
    gt.vis[0] = 2;
    gt.coords[0] = Point2{rng.uniform01(), rng.uniform01()};
  }
  return gt;
}

TeacherPrediction random_teacher(Rng& rng, std::string id,
                                 std::size_t keypoints, std::size_t bins) {
  TeacherPrediction t;
  t.teacher_id = std::move(id);
  for (std::size_t k = 0; k < keypoints; ++k) {
    if (rng.uniform01() < 0.6) t.covered.push_back(k);
  }
  if (t.covered.empty()) t.covered.push_back(rng.index(keypoints));
  for (std::size_t i = 0; i < t.covered.size(); ++i) {
    t.dists.push_back(random_distribution(rng, bins));
  }
  return t;
}

double random_temperature(Rng& rng) {
  const double choices[] = {0.5, 1.0, 2.0};
  return choices[rng.index(3)];
}

GradcheckResult check_ck_coords(const GradcheckConfig& cfg) {
  Rng rng(mix_seed(cfg.seed, "ck_coords"));
  double max_err = 0.0;
  for (std::size_t c = 0; c < cfg.cases; ++c) {
    const std::size_t keypoints = 1 + rng.index(4);
    const auto gt = random_gt(rng, keypoints);
    std::vector<double> flat(2 * keypoints);
    for (auto& v : flat) v = rng.uniform01();

    auto eval = [&](const std::vector<double>& x) {
      StudentPrediction pred;
      pred.coords.resize(keypoints);
      for (std::size_t k = 0; k < keypoints; ++k) {
        pred.coords[k] = Point2{x[2 * k], x[2 * k + 1]};
      }
      return conditional_keypoint_loss(pred, gt).value;
    };

    StudentPrediction pred;
    pred.coords.resize(keypoints);
    for (std::size_t k = 0; k < keypoints; ++k) {
      pred.coords[k] = Point2{flat[2 * k], flat[2 * k + 1]};
    }
    const auto result = conditional_keypoint_loss(pred, gt);
    std::vector<double> analytic(2 * keypoints);
    for (std::size_t k = 0; k < keypoints; ++k) {
      analytic[2 * k] = result.grad_coords[k].x;
      analytic[2 * k + 1] = result.grad_coords[k].y;
    }
    check_vector(std::move(analytic), flat, eval, cfg, max_err);
  }
  return GradcheckResult{"ck_coords", cfg.cases, max_err,
                         max_err <= cfg.tolerance};
}

GradcheckResult check_softargmax(const GradcheckConfig& cfg) {
  Rng rng(mix_seed(cfg.seed, "softargmax"));
  double max_err = 0.0;
  for (std::size_t c = 0; c < cfg.cases; ++c) {
    const std::size_t bins = 4 + rng.index(9);
    const double tau = random_temperature(rng);
    auto lx = random_logits(rng, bins);
    const auto ly = random_logits(rng, bins);

    auto eval = [&](const std::vector<double>& x) {
      const KeypointDistribution d{softmax(x, tau), softmax(ly, tau)};
      return soft_argmax_decode(d, tau).coord.x;
    };

    const KeypointDistribution d{softmax(lx, tau), softmax(ly, tau)};
    auto analytic = soft_argmax_decode(d, tau).dx_dlogit;
    check_vector(std::move(analytic), lx, eval, cfg, max_err);
  }
  return GradcheckResult{"softargmax", cfg.cases, max_err,
                         max_err <= cfg.tolerance};
}

GradcheckResult check_kl_logits(const GradcheckConfig& cfg) {
  Rng rng(mix_seed(cfg.seed, "kl_logits"));
  double max_err = 0.0;
  for (std::size_t c = 0; c < cfg.cases; ++c) {
    const std::size_t keypoints = 1 + rng.index(4);
    const std::size_t bins = 4 + rng.index(9);
    const double tau = random_temperature(rng);
    const auto direction = (c % 2 == 0) ? KlDirection::teacher_target
                                        : KlDirection::student_target;
    const auto teacher = random_teacher(rng, "t", keypoints, bins);
    auto logits = random_logits(rng, keypoints * 2 * bins);

    auto eval = [&](const std::vector<double>& x) {
      return kl_distill_loss(make_prediction(x, keypoints, bins, tau), teacher,
                             direction)
          .value;
    };

    auto analytic =
        kl_distill_loss(make_prediction(logits, keypoints, bins, tau), teacher,
                        direction)
            .grad_logits;
    check_vector(std::move(analytic), logits, eval, cfg, max_err);
  }
  return GradcheckResult{"kl_logits", cfg.cases, max_err,
                         max_err <= cfg.tolerance};
}

GradcheckResult check_total_logits(const GradcheckConfig& cfg) {
  Rng rng(mix_seed(cfg.seed, "total_logits"));
  double max_err = 0.0;
  for (std::size_t c = 0; c < cfg.cases; ++c) {
    const std::size_t keypoints = 1 + rng.index(4);
    const std::size_t bins = 4 + rng.index(9);
    const double tau = random_temperature(rng);
    const auto direction = (c % 2 == 0) ? KlDirection::teacher_target
                                        : KlDirection::student_target;
    const auto gt = random_gt(rng, keypoints);

    std::vector<TeacherPrediction> teachers;
    teachers.push_back(random_teacher(rng, "a", keypoints, bins));
    if (rng.uniform01() < 0.5) {
      teachers.push_back(random_teacher(rng, "b", keypoints, bins));
    }
    LossWeights w;
    w.alpha = rng.uniform01();
    for (const auto& t : teachers) {
      w.betas[t.teacher_id] = rng.uniform(0.1, 1.0);
    }
    auto logits = random_logits(rng, keypoints * 2 * bins);

    auto eval = [&](const std::vector<double>& x) {
      return total_loss(make_prediction(x, keypoints, bins, tau), gt, teachers,
                        w, direction)
          .value;
    };

    auto analytic =
        total_loss(make_prediction(logits, keypoints, bins, tau), gt, teachers,
                   w, direction)
            .grad_logits;
    check_vector(std::move(analytic), logits, eval, cfg, max_err);
  }
  return GradcheckResult{"total_logits", cfg.cases, max_err,
                         max_err <= cfg.tolerance};
}

GradcheckResult check_model_backward(const GradcheckConfig& cfg) {
  Rng rng(mix_seed(cfg.seed, "model_backward"));
  double max_err = 0.0;
  for (std::size_t c = 0; c < cfg.cases; ++c) {
    const std::size_t d_in = 2 + rng.index(4);
    const std::size_t hidden = 3 + rng.index(6);
    const std::size_t keypoints = 1 + rng.index(2);
    const std::size_t bins = 4 + rng.index(5);
    StudentModel m = init_student(d_in, hidden, keypoints, bins,
                                  rng.next_u64());
    Eigen::VectorXd z(static_cast<Eigen::Index>(d_in));
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.uniform(-1.0, 1.0);
    std::vector<double> upstream(m.out_dim());
    for (auto& v : upstream) v = rng.uniform(-1.0, 1.0);

    // Scalar objective: upstream . logits(theta, z).
    auto objective = [&](const StudentModel& model) {
      Eigen::MatrixXd Z = z;
      const auto cache = forward_batch(model, Z);
      double s = 0.0;
      for (std::size_t i = 0; i < upstream.size(); ++i) {
        s += upstream[i] * cache.logits(static_cast<Eigen::Index>(i), 0);
      }
      return s;
    };

    const ModelGradients grads = backward(m, z, upstream);

    // Flatten parameters and gradients in one fixed order.
    std::vector<double*> params;
    std::vector<double> analytic;
    auto collect = [&](Eigen::MatrixXd& p, const Eigen::MatrixXd& g) {
      for (Eigen::Index r = 0; r < p.rows(); ++r) {
        for (Eigen::Index col = 0; col < p.cols(); ++col) {
          params.push_back(&p(r, col));
          analytic.push_back(g(r, col));
        }
      }
    };
    auto collect_vec = [&](Eigen::VectorXd& p, const Eigen::VectorXd& g) {
      for (Eigen::Index r = 0; r < p.size(); ++r) {
        params.push_back(&p(r));
        analytic.push_back(g(r));
      }
    };
    collect(m.W1, grads.W1);
    collect_vec(m.b1, grads.b1);
    collect(m.W2, grads.W2);
    collect_vec(m.b2, grads.b2);

    if (cfg.inject_fault) {
      std::size_t worst = 0;
      for (std::size_t i = 1; i < analytic.size(); ++i) {
        if (std::abs(analytic[i]) > std::abs(analytic[worst])) worst = i;
      }
      analytic[worst] = -analytic[worst];
    }

    for (std::size_t i = 0; i < params.size(); ++i) {
      const double saved = *params[i];
      *params[i] = saved + cfg.step;
      const double hi = objective(m);
      *params[i] = saved - cfg.step;
      const double lo = objective(m);
      *params[i] = saved;
      const double numeric = (hi - lo) / (2.0 * cfg.step);
      max_err = std::max(max_err, rel_err(analytic[i], numeric));
    }
  }
  return GradcheckResult{"model_backward", cfg.cases, max_err,
                         max_err <= cfg.tolerance};
}

}  // namespace

std::vector<std::string> gradcheck_families() {
  return {"ck_coords", "softargmax", "kl_logits", "total_logits",
          "model_backward"};
}

GradcheckResult run_gradcheck_family(std::string_view family,
                                     const GradcheckConfig& cfg) {
  if (cfg.cases == 0) throw ConfigError("gradcheck needs at least one case");
  if (!(cfg.step > 0.0)) throw ConfigError("gradcheck step must be > 0");
  if (!(cfg.tolerance > 0.0)) {
    throw ConfigError("gradcheck tolerance must be > 0");
  }
  if (family == "ck_coords") return check_ck_coords(cfg);
  if (family == "softargmax") return check_softargmax(cfg);
  if (family == "kl_logits") return check_kl_logits(cfg);
  if (family == "total_logits") return check_total_logits(cfg);
  if (family == "model_backward") return check_model_backward(cfg);
  throw ConfigError("unknown gradcheck family \"" + std::string(family) +
                    "\"");
}

std::vector<GradcheckResult> run_gradcheck(
    const std::vector<std::string>& families, const GradcheckConfig& cfg) {
  std::vector<GradcheckResult> results;
  results.reserve(families.size());
  for (const auto& family : families) {
    results.push_back(run_gradcheck_family(family, cfg));
  }
  return results;
}

std::string gradcheck_results_to_json(
    const std::vector<GradcheckResult>& results) {
  nlohmann::json rows = nlohmann::json::array();
  bool all_pass = true;
  for (const auto& r : results) {
    rows.push_back({{"family", r.family},
                    {"cases", r.cases},
                    {"max_rel_err", r.max_rel_err},
                    {"pass", r.pass}});
    all_pass = all_pass && r.pass;
  }
  return nlohmann::json{{"families", std::move(rows)}, {"pass", all_pass}}
      .dump();
}

}  // namespace poseunion
