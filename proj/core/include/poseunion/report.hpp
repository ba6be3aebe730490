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

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "poseunion/experiment.hpp"
#include "poseunion/metrics.hpp"

namespace poseunion {

/// Column-aligned plain-text table. All rows must match the header width.
class TextTable {
 public:
  explicit TextTable(std::vector<std::string> header);

  void add_row(std::vector<std::string> cells);

  /// Padded columns separated by two spaces, header underlined with dashes.
  std::string render() const;
  /// RFC 4180 style quoting.
  std::string render_csv() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Fixed-precision decimal; NaN renders as "-".
std::string format_metric(double value, int precision = 4);

/// Mean PCK per joint group (Head, Face, Shoulder, Elbow, Wrist, Trunk,
/// Hip, Knee, Ankle) from a per-keypoint breakdown. Groups with no member
/// present are omitted.
std::map<std::string, double> joint_group_means(
    const std::map<std::string, double>& per_keypoint);

/// One comparison row: headline metrics of a run. Missing metrics are NaN.
struct SummaryRow {
  std::string method;
  double pck;
  double pck01;
  double ap;
  double ap50;
  double ap75;
  double ar;
  double ar50;
  double ar75;
  std::size_t keypoints = 0;

  SummaryRow();
  /// (PCK + AP) / 2, scaled to percent. NaN when either half is missing.
  double avg() const;
};

SummaryRow summary_row(std::string method, const ExperimentEval& eval);

std::string render_summary_table(const std::vector<SummaryRow>& rows);
std::string render_summary_csv(const std::vector<SummaryRow>& rows);

/// Whole-run rendering. format is "text", "csv" or "json"; anything else
/// throws ConfigError. The json format is run_log_to_json verbatim.
std::string render_run_log(const RunLog& log, std::string_view format);

/// Standalone eval-report rendering for the eval subcommand.
std::string render_eval_report(const EvalReport& report,
                               std::string_view format);

std::string render_ablation(const AblationReport& report,
                            std::string_view format);

}  // namespace poseunion
