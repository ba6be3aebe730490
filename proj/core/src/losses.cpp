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

#include "poseunion/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "poseunion/errors.hpp"

namespace poseunion {

using nlohmann::json;

namespace {

void check_probs(const std::vector<double>& probs, const char* axis) {
  if (probs.size() < 2) {
    throw ContractError(std::string(axis) +
                        " distribution needs at least 2 bins");
  }
  double sum = 0.0;
  for (const double p : probs) {
    if (!(p >= 0.0)) {
      throw ContractError(std::string(axis) +
                          " distribution has a negative or NaN entry");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ContractError(std::string(axis) + " distribution sums to " +
                        std::to_string(sum) + ", expected 1 within 1e-9");
  }
}

}  // namespace

void KeypointDistribution::validate() const {
  check_probs(x_probs, "x");
  check_probs(y_probs, "y");
}

void LossWeights::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("alpha must be in [0,1], got " + std::to_string(alpha));
  }
  for (const auto& [id, beta] : betas) {
    if (!(beta >= 0.0)) {
      throw ConfigError("beta for teacher \"" + id +
                        "\" must be >= 0, got " + std::to_string(beta));
    }
  }
}

std::vector<double> softmax(std::span<const double> logits,
                            double temperature) {
  if (logits.empty()) throw ContractError("softmax of an empty vector");
  if (!(temperature > 0.0)) {
    throw ContractError("softmax temperature must be positive");
  }
  double max_scaled = -std::numeric_limits<double>::infinity();
  for (const double l : logits) max_scaled = std::max(max_scaled, l / temperature);
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t b = 0; b < logits.size(); ++b) {
    out[b] = std::exp(logits[b] / temperature - max_scaled);
    sum += out[b];
  }
  for (double& p : out) p /= sum;
  return out;
}

double bin_center(std::size_t b, std::size_t bins) {
  return (static_cast<double>(b) + 0.5) / static_cast<double>(bins);
}

StudentPrediction make_prediction(std::vector<double> logits,
                                  std::size_t keypoints, std::size_t bins,
                                  double temperature) {
  if (bins < 2) throw ContractError("bins must be >= 2");
  if (logits.size() != keypoints * 2 * bins) {
    throw ContractError("logits length " + std::to_string(logits.size()) +
                        " != keypoints * 2 * bins = " +
                        std::to_string(keypoints * 2 * bins));
  }
  StudentPrediction pred;
  pred.logits = std::move(logits);
  pred.bins = bins;
  pred.temperature = temperature;
  pred.dists.resize(keypoints);
  pred.coords.resize(keypoints);
  const std::span<const double> flat(pred.logits);
  for (std::size_t k = 0; k < keypoints; ++k) {
    auto& d = pred.dists[k];
    d.x_probs = softmax(flat.subspan((k * 2 + 0) * bins, bins), temperature);
    d.y_probs = softmax(flat.subspan((k * 2 + 1) * bins, bins), temperature);
    double x = 0.0;
    double y = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
      x += d.x_probs[b] * bin_center(b, bins);
      y += d.y_probs[b] * bin_center(b, bins);
    }
    pred.coords[k] = Point2{x, y};
  }
  return pred;
}

SoftArgmaxResult soft_argmax_decode(const KeypointDistribution& d,
                                    double temperature) {
  d.validate();
  if (!(temperature > 0.0)) {
    throw ContractError("soft_argmax_decode temperature must be positive");
  }
  SoftArgmaxResult out;
  const std::size_t bx = d.x_probs.size();
  const std::size_t by = d.y_probs.size();
  for (std::size_t b = 0; b < bx; ++b) {
    out.coord.x += d.x_probs[b] * bin_center(b, bx);
  }
  for (std::size_t b = 0; b < by; ++b) {
    out.coord.y += d.y_probs[b] * bin_center(b, by);
  }
  out.dx_dlogit.resize(bx);
  out.dy_dlogit.resize(by);
  for (std::size_t b = 0; b < bx; ++b) {
    out.dx_dlogit[b] =
        d.x_probs[b] * (bin_center(b, bx) - out.coord.x) / temperature;
  }
  for (std::size_t b = 0; b < by; ++b) {
    out.dy_dlogit[b] =
        d.y_probs[b] * (bin_center(b, by) - out.coord.y) / temperature;
  }
  return out;
}

CkLossResult conditional_keypoint_loss(const StudentPrediction& pred,
                                       const UnifiedInstance& gt) {
  const std::size_t n = pred.keypoints();
  if (gt.coords.size() != n || gt.mask.size() != n) {
    throw ContractError("prediction has " + std::to_string(n) +
                        " keypoints, ground truth has " +
                        std::to_string(gt.coords.size()));
  }
  CkLossResult out;
  out.grad_coords.assign(n, Point2{});
  for (std::size_t k = 0; k < n; ++k) {
    if (!gt.mask[k]) continue;
    const double dx = pred.coords[k].x - gt.coords[k].x;
    const double dy = pred.coords[k].y - gt.coords[k].y;
    out.value += dx * dx + dy * dy;
    out.grad_coords[k] = Point2{2.0 * dx, 2.0 * dy};
  }
  return out;
}

namespace {

/// KL over one axis plus gradient into one logit slice.
double kl_axis(const std::vector<double>& t, const std::vector<double>& p,
               double temperature, KlDirection direction,
               std::span<double> grad) {
  const std::size_t bins = t.size();
  double value = 0.0;
  if (direction == KlDirection::teacher_target) {
    for (std::size_t b = 0; b < bins; ++b) {
      if (t[b] > 0.0) {
        if (!(p[b] > 0.0)) {
          throw ContractError(
              "KL(t||p) hit a bin with t > 0 and p = 0; student "
              "distributions must be softmax-produced");
        }
        value += t[b] * (std::log(t[b]) - std::log(p[b]));
      }
    }
    for (std::size_t b = 0; b < bins; ++b) {
      grad[b] = (p[b] - t[b]) / temperature;
    }
  } else {
    for (std::size_t b = 0; b < bins; ++b) {
      if (p[b] > 0.0) {
        if (!(t[b] > 0.0)) {
          throw ContractError(
              "KL(p||t) is infinite: teacher has a hard zero where the "
              "student has mass");
        }
        value += p[b] * (std::log(p[b]) - std::log(t[b]));
      }
    }
    for (std::size_t b = 0; b < bins; ++b) {
      const double ratio = p[b] > 0.0 ? std::log(p[b]) - std::log(t[b]) : 0.0;
      grad[b] = p[b] * (ratio - value) / temperature;
    }
  }
  return value;
}

}  // namespace

KlLossResult kl_distill_loss(const StudentPrediction& pred,
                             const TeacherPrediction& teacher,
                             KlDirection direction) {
  const std::size_t n = pred.keypoints();
  const std::size_t bins = pred.bins;
  if (teacher.covered.size() != teacher.dists.size()) {
    throw ContractError("teacher \"" + teacher.teacher_id +
                        "\": covered and dists sizes differ");
  }
  KlLossResult out;
  out.grad_logits.assign(n * 2 * bins, 0.0);
  const std::span<double> flat(out.grad_logits);
  for (std::size_t i = 0; i < teacher.covered.size(); ++i) {
    const std::size_t k = teacher.covered[i];
    if (k >= n) {
      throw ContractError("teacher \"" + teacher.teacher_id +
                          "\" covers slot " + std::to_string(k) +
                          " outside the union");
    }
    const auto& t = teacher.dists[i];
    if (t.x_probs.size() != bins || t.y_probs.size() != bins) {
      throw ContractError("teacher \"" + teacher.teacher_id +
                          "\" bin count differs from the student's");
    }
    out.value += kl_axis(t.x_probs, pred.dists[k].x_probs, pred.temperature,
                         direction, flat.subspan((k * 2 + 0) * bins, bins));
    out.value += kl_axis(t.y_probs, pred.dists[k].y_probs, pred.temperature,
                         direction, flat.subspan((k * 2 + 1) * bins, bins));
  }
  return out;
}

std::vector<double> coord_grad_to_logits(const StudentPrediction& pred,
                                         const std::vector<Point2>& grad_coords) {
  const std::size_t n = pred.keypoints();
  const std::size_t bins = pred.bins;
  if (grad_coords.size() != n) {
    throw ContractError("coordinate gradient has " +
                        std::to_string(grad_coords.size()) +
                        " entries for " + std::to_string(n) + " keypoints");
  }
  std::vector<double> out(n * 2 * bins, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& g = grad_coords[k];
    if (g.x == 0.0 && g.y == 0.0) continue;
    const auto sa = soft_argmax_decode(pred.dists[k], pred.temperature);
    for (std::size_t b = 0; b < bins; ++b) {
      out[(k * 2 + 0) * bins + b] = g.x * sa.dx_dlogit[b];
      out[(k * 2 + 1) * bins + b] = g.y * sa.dy_dlogit[b];
    }
  }
  return out;
}

TotalLossResult total_loss(const StudentPrediction& pred,
                           const UnifiedInstance& gt,
                           const std::vector<TeacherPrediction>& teachers,
                           const LossWeights& w, KlDirection direction) {
  w.validate();
  for (const auto& teacher : teachers) {
    if (!w.betas.contains(teacher.teacher_id)) {
      throw ConfigError("teacher \"" + teacher.teacher_id +
                        "\" has no beta weight");
    }
  }

  TotalLossResult out;
  const auto ck = conditional_keypoint_loss(pred, gt);
  out.ck_value = ck.value;
  out.value = w.alpha * ck.value;

  out.grad_coords.assign(pred.keypoints(), Point2{});
  if (w.alpha != 0.0) {
    for (std::size_t k = 0; k < pred.keypoints(); ++k) {
      const auto& g = ck.grad_coords[k];
      if (g.x == 0.0 && g.y == 0.0) continue;
      out.grad_coords[k] = Point2{w.alpha * g.x, w.alpha * g.y};
    }
  }
  out.grad_logits = coord_grad_to_logits(pred, out.grad_coords);

  const double distill_weight = 1.0 - w.alpha;
  for (const auto& teacher : teachers) {
    const auto kl = kl_distill_loss(pred, teacher, direction);
    out.kl_values[teacher.teacher_id] = kl.value;
    const double factor = distill_weight * w.betas.at(teacher.teacher_id);
    out.value += factor * kl.value;
    if (factor != 0.0) {
      for (std::size_t i = 0; i < out.grad_logits.size(); ++i) {
        out.grad_logits[i] += factor * kl.grad_logits[i];
      }
    }
  }
  return out;
}

namespace {

KlDirection parse_direction(const std::string& text) {
  if (text == "teacher_target") return KlDirection::teacher_target;
  if (text == "student_target") return KlDirection::student_target;
  throw ConfigError("kl_direction must be teacher_target or student_target, "
                    "got \"" + text + "\"");
}

const char* direction_name(KlDirection direction) {
  return direction == KlDirection::teacher_target ? "teacher_target"
                                                  : "student_target";
}

}  // namespace

LossConfig parse_loss_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw FormatError("loss config parse failed at byte " +
                      std::to_string(e.byte) + ": " + e.what());
  }
  LossConfig config;
  if (!doc.contains("alpha")) throw ConfigError("loss config needs alpha");
  config.weights.alpha = doc.at("alpha").get<double>();
  if (doc.contains("betas")) {
    config.weights.betas =
        doc.at("betas").get<std::map<std::string, double>>();
  }
  config.bins = doc.value("bins", std::size_t{64});
  config.kl_direction =
      parse_direction(doc.value("kl_direction", "teacher_target"));
  config.temperature = doc.value("temperature", 1.0);

  config.weights.validate();
  if (config.bins < 2) throw ConfigError("bins must be >= 2");
  if (!(config.temperature > 0.0)) {
    throw ConfigError("temperature must be positive");
  }
  return config;
}

std::string write_loss_config(const LossConfig& config) {
  const json doc = {
      {"alpha", config.weights.alpha},
      {"betas", config.weights.betas},
      {"bins", config.bins},
      {"kl_direction", direction_name(config.kl_direction)},
      {"temperature", config.temperature},
  };
  return doc.dump();
}

}  // namespace poseunion
