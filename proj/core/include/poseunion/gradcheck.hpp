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
#include <string_view>
#include <vector>

namespace poseunion {

/// Central-difference verification of every analytic gradient in the loss
/// and model stack, on randomized small problems.
struct GradcheckConfig {
  /// Central difference step.
  double step = 1e-6;
  /// Maximum allowed relative error |a - f| / max(1, |a|, |f|).
  double tolerance = 1e-5;
  /// Randomized cases per family.
  std::size_t cases = 1000;
  std::uint64_t seed = 2026;
  /// Negates the largest analytic gradient component of every case. A
  /// working checker must then report failure; proves the harness can
  /// actually catch a wrong gradient.
  bool inject_fault = false;
};

struct GradcheckResult {
  std::string family;
  std::size_t cases = 0;
  /// Worst relative error over all gradient components of all cases.
  double max_rel_err = 0.0;
  bool pass = false;
};

/// All family names, in canonical order: ck_coords, softargmax, kl_logits,
/// total_logits, model_backward.
std::vector<std::string> gradcheck_families();

/// Throws ConfigError for an unknown family name.
GradcheckResult run_gradcheck_family(std::string_view family,
                                     const GradcheckConfig& cfg);

std::vector<GradcheckResult> run_gradcheck(
    const std::vector<std::string>& families, const GradcheckConfig& cfg);

std::string gradcheck_results_to_json(
    const std::vector<GradcheckResult>& results);

}  // namespace poseunion
