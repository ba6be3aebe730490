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

#include "poseunion/model.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include "poseunion/errors.hpp"
#include "poseunion/rng.hpp"

namespace poseunion {

std::size_t StudentModel::parameter_count() const {
  return static_cast<std::size_t>(W1.size() + b1.size() + W2.size() +
                                  b2.size());
}

bool StudentModel::finite() const {
  return W1.allFinite() && b1.allFinite() && W2.allFinite() && b2.allFinite();
}

bool ModelGradients::finite() const {
  return W1.allFinite() && b1.allFinite() && W2.allFinite() && b2.allFinite();
}

namespace {

void fill_uniform(Eigen::Ref<Eigen::MatrixXd> m, double bound, Rng& rng) {
  // Row-major traversal so the draw order is layout-independent.
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = rng.uniform(-bound, bound);
    }
  }
}

}  // namespace

StudentModel init_student(std::size_t d_in, std::size_t hidden,
                          std::size_t keypoints, std::size_t bins,
                          std::uint64_t seed) {
  if (d_in == 0 || hidden == 0 || keypoints == 0 || bins < 2) {
    throw ConfigError("model dimensions must be positive (bins >= 2)");
  }
  StudentModel m;
  m.keypoints = keypoints;
  m.bins = bins;
  const auto n_in = static_cast<Eigen::Index>(d_in);
  const auto n_h = static_cast<Eigen::Index>(hidden);
  const auto n_out = static_cast<Eigen::Index>(keypoints * 2 * bins);
  m.W1.resize(n_h, n_in);
  m.b1.resize(n_h);
  m.W2.resize(n_out, n_h);
  m.b2.resize(n_out);

  Rng rng(mix_seed(seed, "init"));
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(d_in));
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  fill_uniform(m.W1, bound1, rng);
  fill_uniform(m.b1, bound1, rng);
  fill_uniform(m.W2, bound2, rng);
  fill_uniform(m.b2, bound2, rng);
  return m;
}

ModelGradients zeros_like(const StudentModel& m) {
  ModelGradients g;
  g.W1 = Eigen::MatrixXd::Zero(m.W1.rows(), m.W1.cols());
  g.b1 = Eigen::VectorXd::Zero(m.b1.size());
  g.W2 = Eigen::MatrixXd::Zero(m.W2.rows(), m.W2.cols());
  g.b2 = Eigen::VectorXd::Zero(m.b2.size());
  return g;
}

ForwardCache forward_batch(const StudentModel& m, const Eigen::MatrixXd& Z) {
  if (Z.rows() != m.W1.cols()) {
    throw ContractError("input dimension " + std::to_string(Z.rows()) +
                        " != model d_in " + std::to_string(m.W1.cols()));
  }
  ForwardCache cache;
  cache.Z = Z;
  cache.H = ((m.W1 * Z).colwise() + m.b1).array().tanh();
  cache.logits = (m.W2 * cache.H).colwise() + m.b2;
  return cache;
}

StudentPrediction prediction_from_column(const StudentModel& m,
                                         const Eigen::MatrixXd& logits,
                                         std::size_t column,
                                         double temperature) {
  if (static_cast<Eigen::Index>(column) >= logits.cols()) {
    throw ContractError("logit column out of range");
  }
  std::vector<double> flat(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    flat[static_cast<std::size_t>(i)] =
        logits(i, static_cast<Eigen::Index>(column));
  }
  return make_prediction(std::move(flat), m.keypoints, m.bins, temperature);
}

StudentPrediction forward(const StudentModel& m, const Eigen::VectorXd& z,
                          double temperature) {
  const auto cache = forward_batch(m, z);
  return prediction_from_column(m, cache.logits, 0, temperature);
}

ModelGradients backward_batch(const StudentModel& m, const ForwardCache& cache,
                              const Eigen::MatrixXd& upstream) {
  if (upstream.rows() != cache.logits.rows() ||
      upstream.cols() != cache.logits.cols()) {
    throw ContractError("upstream gradient shape mismatch");
  }
  ModelGradients g;
  g.W2 = upstream * cache.H.transpose();
  g.b2 = upstream.rowwise().sum();
  const Eigen::MatrixXd dH = m.W2.transpose() * upstream;
  const Eigen::MatrixXd dPre =
      dH.array() * (1.0 - cache.H.array().square());
  g.W1 = dPre * cache.Z.transpose();
  g.b1 = dPre.rowwise().sum();
  return g;
}

ModelGradients backward(const StudentModel& m, const Eigen::VectorXd& z,
                        const std::vector<double>& upstream) {
  if (upstream.size() != m.out_dim()) {
    throw ContractError("upstream gradient length " +
                        std::to_string(upstream.size()) + " != out_dim " +
                        std::to_string(m.out_dim()));
  }
  const auto cache = forward_batch(m, z);
  Eigen::MatrixXd U(static_cast<Eigen::Index>(upstream.size()), 1);
  for (std::size_t i = 0; i < upstream.size(); ++i) {
    U(static_cast<Eigen::Index>(i), 0) = upstream[i];
  }
  return backward_batch(m, cache, U);
}

double LrSchedule::lr_at(std::size_t step) const {
  if (!(base_lr > 0.0) || min_lr < 0.0 || total_steps == 0 ||
      warmup_steps >= total_steps) {
    throw ConfigError("invalid learning-rate schedule");
  }
  if (step < warmup_steps) {
    return base_lr * static_cast<double>(step + 1) /
           static_cast<double>(warmup_steps);
  }
  const auto capped = std::min(step, total_steps);
  const double progress = static_cast<double>(capped - warmup_steps) /
                          static_cast<double>(total_steps - warmup_steps);
  constexpr double pi = 3.14159265358979323846;
  return min_lr + 0.5 * (base_lr - min_lr) * (1.0 + std::cos(pi * progress));
}

TrainState make_train_state(StudentModel m) {
  TrainState state;
  state.velocity = zeros_like(m);
  state.params = std::move(m);
  return state;
}

void sgd_step(TrainState& state, const ModelGradients& grads,
              const LrSchedule& schedule, double momentum) {
  if (!grads.finite()) {
    throw ContractError("non-finite gradient at step " +
                        std::to_string(state.step) + "; training diverged");
  }
  const double lr = schedule.lr_at(state.step);
  auto update = [&](Eigen::MatrixXd& v, Eigen::MatrixXd& p,
                    const Eigen::MatrixXd& g) {
    v = momentum * v - lr * g;
    p += v;
  };
  auto update_vec = [&](Eigen::VectorXd& v, Eigen::VectorXd& p,
                        const Eigen::VectorXd& g) {
    v = momentum * v - lr * g;
    p += v;
  };
  update(state.velocity.W1, state.params.W1, grads.W1);
  update_vec(state.velocity.b1, state.params.b1, grads.b1);
  update(state.velocity.W2, state.params.W2, grads.W2);
  update_vec(state.velocity.b2, state.params.b2, grads.b2);
  state.lr = lr;
  ++state.step;
}

void TeacherOracle::validate(std::size_t union_size) const {
  if (covered.empty()) {
    throw ConfigError("teacher \"" + teacher_id + "\" covers no slots");
  }
  for (const std::size_t k : covered) {
    if (k >= union_size) {
      throw ConfigError("teacher \"" + teacher_id + "\" covers slot " +
                        std::to_string(k) + " outside the union");
    }
  }
  if (!(concentration > 0.0)) {
    throw ConfigError("teacher concentration must be positive");
  }
  if (noise < 0.0) throw ConfigError("teacher noise must be >= 0");
}

namespace {

std::vector<double> gaussian_bins(double center, double width,
                                  std::size_t bins) {
  std::vector<double> exponent(bins);
  double max_exp = -std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < bins; ++b) {
    const double d = bin_center(b, bins) - center;
    exponent[b] = -d * d / (2.0 * width * width);
    max_exp = std::max(max_exp, exponent[b]);
  }
  double sum = 0.0;
  std::vector<double> probs(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    probs[b] = std::exp(exponent[b] - max_exp);
    sum += probs[b];
  }
  for (double& p : probs) p /= sum;
  return probs;
}

}  // namespace

TeacherPrediction teacher_predict(const TeacherOracle& oracle,
                                  const UnifiedInstance& gt,
                                  std::size_t bins) {
  oracle.validate(gt.coords.size());
  if (bins < 2) throw ContractError("bins must be >= 2");
  const double width = oracle.concentration / static_cast<double>(bins);

  TeacherPrediction out;
  out.teacher_id = oracle.teacher_id;
  for (const std::size_t k : oracle.covered) {
    if (!gt.mask[k]) {
      throw ContractError("teacher \"" + oracle.teacher_id +
                          "\" needs ground truth at slot " +
                          std::to_string(k) + " (image " +
                          std::to_string(gt.image_id) + ")");
    }
    Rng rng(mix_seed(mix_seed(mix_seed(oracle.seed, "teacher"),
                              static_cast<std::uint64_t>(gt.image_id)),
                     static_cast<std::uint64_t>(k)));
    const double cx = gt.coords[k].x + oracle.noise * rng.normal();
    const double cy = gt.coords[k].y + oracle.noise * rng.normal();
    KeypointDistribution d;
    d.x_probs = gaussian_bins(cx, width, bins);
    d.y_probs = gaussian_bins(cy, width, bins);
    out.covered.push_back(k);
    out.dists.push_back(std::move(d));
  }
  return out;
}

namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

void put_matrix(std::string& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::uint64_t bits;
      const double v = m(r, c);
      std::memcpy(&bits, &v, sizeof bits);
      put_u64(out, bits);
    }
  }
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  std::uint64_t u64() {
    if (pos_ + 8 > bytes_.size()) {
      throw FormatError("checkpoint truncated");
    }
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(
               static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }

  std::string_view raw(std::size_t n) {
    if (pos_ + n > bytes_.size()) {
      throw FormatError("checkpoint truncated");
    }
    const auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

void read_matrix(ByteReader& reader, Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = reader.f64();
    }
  }
}

constexpr char kMagic[4] = {'P', 'K', 'P', 'T'};
constexpr std::uint64_t kVersion = 1;

}  // namespace

std::string serialize_checkpoint(const TrainState& state,
                                 std::string_view config_digest) {
  const auto& m = state.params;
  std::string out;
  out.append(kMagic, sizeof kMagic);
  put_u64(out, kVersion);
  put_u64(out, static_cast<std::uint64_t>(m.d_in()));
  put_u64(out, static_cast<std::uint64_t>(m.hidden()));
  put_u64(out, static_cast<std::uint64_t>(m.keypoints));
  put_u64(out, static_cast<std::uint64_t>(m.bins));
  put_u64(out, static_cast<std::uint64_t>(state.step));
  std::uint64_t lr_bits;
  std::memcpy(&lr_bits, &state.lr, sizeof lr_bits);
  put_u64(out, lr_bits);
  put_u64(out, static_cast<std::uint64_t>(config_digest.size()));
  out.append(config_digest);
  put_matrix(out, m.W1);
  put_matrix(out, m.b1);
  put_matrix(out, m.W2);
  put_matrix(out, m.b2);
  put_matrix(out, state.velocity.W1);
  put_matrix(out, state.velocity.b1);
  put_matrix(out, state.velocity.W2);
  put_matrix(out, state.velocity.b2);
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  if (bytes.size() < 4 ||
      std::string_view(bytes.data(), 4) != std::string_view(kMagic, 4)) {
    throw FormatError("not a checkpoint file (bad magic)");
  }
  ByteReader reader(bytes.substr(4));
  const auto version = reader.u64();
  if (version != kVersion) {
    throw FormatError("unsupported checkpoint version " +
                      std::to_string(version));
  }
  const auto d_in = reader.u64();
  const auto hidden = reader.u64();
  const auto keypoints = reader.u64();
  const auto bins = reader.u64();
  const auto step = reader.u64();
  const auto lr_bits = reader.u64();
  const auto digest_size = reader.u64();

  Checkpoint ckpt;
  ckpt.config_digest = std::string(reader.raw(digest_size));

  StudentModel m;
  m.keypoints = keypoints;
  m.bins = bins;
  m.W1.resize(static_cast<Eigen::Index>(hidden),
              static_cast<Eigen::Index>(d_in));
  m.b1.resize(static_cast<Eigen::Index>(hidden));
  m.W2.resize(static_cast<Eigen::Index>(keypoints * 2 * bins),
              static_cast<Eigen::Index>(hidden));
  m.b2.resize(static_cast<Eigen::Index>(keypoints * 2 * bins));
  ckpt.state = make_train_state(std::move(m));
  ckpt.state.step = step;
  std::memcpy(&ckpt.state.lr, &lr_bits, sizeof lr_bits);

  auto read_vec = [&](Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = reader.f64();
  };
  read_matrix(reader, ckpt.state.params.W1);
  read_vec(ckpt.state.params.b1);
  read_matrix(reader, ckpt.state.params.W2);
  read_vec(ckpt.state.params.b2);
  read_matrix(reader, ckpt.state.velocity.W1);
  read_vec(ckpt.state.velocity.b1);
  read_matrix(reader, ckpt.state.velocity.W2);
  read_vec(ckpt.state.velocity.b2);
  if (!reader.done()) {
    throw FormatError("checkpoint has trailing bytes");
  }
  return ckpt;
}

}  // namespace poseunion
