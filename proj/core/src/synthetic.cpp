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

#include "poseunion/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "poseunion/errors.hpp"
#include "poseunion/rng.hpp"

namespace poseunion {

Point2 template_position(std::string_view name) {
  static const std::map<std::string, Point2, std::less<>> table = {
      {"nose", {0.50, 0.14}},
      {"left_eye", {0.53, 0.12}},
      {"right_eye", {0.47, 0.12}},
      {"left_ear", {0.56, 0.14}},
      {"right_ear", {0.44, 0.14}},
      {"left_shoulder", {0.62, 0.26}},
      {"right_shoulder", {0.38, 0.26}},
      {"left_elbow", {0.66, 0.40}},
      {"right_elbow", {0.34, 0.40}},
      {"left_wrist", {0.68, 0.53}},
      {"right_wrist", {0.32, 0.53}},
      {"left_hip", {0.58, 0.52}},
      {"right_hip", {0.42, 0.52}},
      {"left_knee", {0.57, 0.72}},
      {"right_knee", {0.43, 0.72}},
      {"left_ankle", {0.56, 0.90}},
      {"right_ankle", {0.44, 0.90}},
      {"pelvis", {0.50, 0.52}},
      {"thorax", {0.50, 0.26}},
      {"upper_neck", {0.50, 0.18}},
      {"head_top", {0.50, 0.06}},
  };
  if (auto it = table.find(name); it != table.end()) return it->second;
  Rng rng(mix_seed(0x706f7365u, name));
  return Point2{0.2 + 0.6 * rng.uniform01(), 0.2 + 0.6 * rng.uniform01()};
}

namespace {

/// Frozen per-slot coordinate map: base + lin . z + warp * sin(dir . z + phase).
struct CoordinateMap {
  double base = 0.0;
  std::vector<double> lin;
  std::vector<double> dir;
  double phase = 0.0;
};

CoordinateMap build_coordinate_map(const SyntheticPoseGenerator& gen,
                                   std::size_t slot, std::size_t axis,
                                   double base) {
  CoordinateMap map;
  map.base = base;
  Rng rng(mix_seed(mix_seed(mix_seed(gen.map_seed, "map"),
                            static_cast<std::uint64_t>(slot)),
                   static_cast<std::uint64_t>(axis)));
  const double lin_std =
      gen.lin_scale / std::sqrt(static_cast<double>(gen.latent_dim));
  map.lin.resize(gen.latent_dim);
  map.dir.resize(gen.latent_dim);
  for (double& w : map.lin) w = lin_std * rng.normal();
  for (double& w : map.dir) {
    w = rng.normal() / std::sqrt(static_cast<double>(gen.latent_dim));
  }
  map.phase = rng.uniform(0.0, 6.283185307179586);
  return map;
}

double apply_map(const CoordinateMap& map, const Eigen::VectorXd& z,
                 double warp_amplitude) {
  double linear = 0.0;
  double angle = map.phase;
  for (std::size_t d = 0; d < map.lin.size(); ++d) {
    linear += map.lin[d] * z(static_cast<Eigen::Index>(d));
    angle += map.dir[d] * z(static_cast<Eigen::Index>(d));
  }
  const double value = map.base + linear + warp_amplitude * std::sin(angle);
  return std::clamp(value, 0.02, 0.98);
}

}  // namespace

SyntheticDataset generate_dataset(const SyntheticPoseGenerator& gen,
                                  std::size_t n,
                                  const SkeletonSchema& labeled_schema,
                                  const UnionSchema& u, std::uint64_t seed,
                                  std::int64_t image_id_offset) {
  if (gen.latent_dim == 0) throw ConfigError("latent_dim must be >= 1");
  if (gen.label_noise < 0.0) throw ConfigError("label_noise must be >= 0");
  if (gen.lin_scale < 0.0 || gen.warp_amplitude < 0.0) {
    throw ConfigError("lin_scale and warp_amplitude must be >= 0");
  }
  const auto mapping = mapping_into(labeled_schema, u);
  std::vector<bool> labeled(u.size(), false);
  for (const std::size_t slot : mapping.index_map) labeled[slot] = true;

  std::vector<CoordinateMap> maps_x(u.size());
  std::vector<CoordinateMap> maps_y(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    const Point2 base = template_position(u.keypoints[k].str());
    maps_x[k] = build_coordinate_map(gen, k, 0, base.x);
    maps_y[k] = build_coordinate_map(gen, k, 1, base.y);
  }

  SyntheticDataset out;
  out.instances.reserve(n);
  out.full_truth.reserve(n);
  out.latents.resize(static_cast<Eigen::Index>(gen.latent_dim),
                     static_cast<Eigen::Index>(n));

  for (std::size_t i = 0; i < n; ++i) {
    Rng latent_rng(mix_seed(mix_seed(seed, "latent"),
                            static_cast<std::uint64_t>(i)));
    Eigen::VectorXd z(static_cast<Eigen::Index>(gen.latent_dim));
    for (Eigen::Index d = 0; d < z.size(); ++d) {
      z(d) = latent_rng.uniform(-1.0, 1.0);
    }
    out.latents.col(static_cast<Eigen::Index>(i)) = z;

    UnifiedInstance truth = make_unified(u.size());
    truth.image_id = image_id_offset + static_cast<std::int64_t>(i);
    truth.bbox = Bbox{0.0, 0.0, 1.0, 1.0};
    truth.area = 1.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
      truth.coords[k] = Point2{apply_map(maps_x[k], z, gen.warp_amplitude),
                               apply_map(maps_y[k], z, gen.warp_amplitude)};
      truth.mask[k] = true;
      truth.vis[k] = 2;
    }

    UnifiedInstance pub = make_unified(u.size());
    pub.image_id = truth.image_id;
    pub.bbox = truth.bbox;
    pub.area = truth.area;
    Rng noise_rng(mix_seed(mix_seed(seed, "noise"),
                           static_cast<std::uint64_t>(i)));
    for (std::size_t k = 0; k < u.size(); ++k) {
      if (!labeled[k]) continue;
      Point2 p = truth.coords[k];
      if (gen.label_noise > 0.0) {
        p.x += gen.label_noise * noise_rng.normal();
        p.y += gen.label_noise * noise_rng.normal();
      }
      pub.coords[k] = p;
      pub.mask[k] = true;
      pub.vis[k] = 2;
    }

    out.full_truth.push_back(std::move(truth));
    out.instances.push_back(std::move(pub));
  }
  return out;
}

}  // namespace poseunion
