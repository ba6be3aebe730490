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

#include <Eigen/Dense>

#include "poseunion/annotation.hpp"
#include "poseunion/schema.hpp"

namespace poseunion {

/// Latent-to-pose generator standing in for real imagery: a humanlike base
/// template per keypoint, a frozen random linear map of the latent, and a
/// bounded sinusoidal warp. The map is fixed once by map_seed; samples are
/// i.i.d. latents through that one map.
struct SyntheticPoseGenerator {
  std::size_t latent_dim = 32;
  std::uint64_t map_seed = 7;
  /// Scale of the linear latent term per coordinate.
  double lin_scale = 0.1;
  double warp_amplitude = 0.05;
  /// Std of Gaussian noise added to the public labels only; the hidden
  /// truth stays clean.
  double label_noise = 0.0;
};

/// Template coordinate for a keypoint name, in the unit square with y
/// growing downward. Names outside the built-in table get a stable
/// hash-derived position.
Point2 template_position(std::string_view name);

struct SyntheticDataset {
  /// Public instances: labeled (masked) only on the labeled schema's slots,
  /// bbox the unit square, area 1.
  std::vector<UnifiedInstance> instances;
  /// Same poses with every union slot labeled; evaluation ground truth for
  /// slots the public labels hide.
  std::vector<UnifiedInstance> full_truth;
  /// Column i is instance i's latent; the student's input.
  Eigen::MatrixXd latents;
};

SyntheticDataset generate_dataset(const SyntheticPoseGenerator& gen,
                                  std::size_t n,
                                  const SkeletonSchema& labeled_schema,
                                  const UnionSchema& u, std::uint64_t seed,
                                  std::int64_t image_id_offset = 0);

}  // namespace poseunion
