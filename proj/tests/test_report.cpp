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
#include <limits>
#include <sstream>

#include <json.hpp>

#include "poseunion/errors.hpp"
#include "poseunion/experiment.hpp"
#include "poseunion/report.hpp"

using namespace poseunion;
using nlohmann::json;

namespace {

ExperimentConfig tiny_config() {
  auto cfg = default_experiment_config();
  cfg.train_count_a = 10;
  cfg.train_count_b = 10;
  cfg.eval_count_a = 5;
  cfg.eval_count_b = 5;
  cfg.epochs = 2;
  cfg.batch_size = 5;
  cfg.model.d_in = 8;
  cfg.model.hidden = 12;
  cfg.loss.bins = 16;
  cfg.generator.latent_dim = 8;
  return cfg;
}

}  // namespace

TEST_CASE("text table aligns columns") {
  TextTable t({"Name", "Value"});
  t.add_row({"alpha", "1"});
  t.add_row({"a_much_longer_name", "22"});
  const auto rendered = t.render();

  std::istringstream lines(rendered);
  std::string header, rule, r1, r2;
  std::getline(lines, header);
  std::getline(lines, rule);
  std::getline(lines, r1);
  std::getline(lines, r2);
  // The value column starts at the same offset on every line.
  CHECK(header.find("Value") == r1.find("1"));
  CHECK(header.find("Value") == r2.find("22"));
  CHECK(rule.find('-') == 0);
  CHECK(rule.size() >= header.size() - 2);

  CHECK_THROWS_AS(t.add_row({"only_one_cell"}), ContractError);
}

TEST_CASE("csv rendering quotes the awkward cases") {
  TextTable t({"a", "b"});
  t.add_row({"plain", "with,comma"});
  t.add_row({"quote\"inside", "line\nbreak"});
  const auto csv = t.render_csv();
  CHECK(csv.find("\"with,comma\"") != std::string::npos);
  CHECK(csv.find("\"quote\"\"inside\"") != std::string::npos);
  CHECK(csv.find("\"line\nbreak\"") != std::string::npos);
  CHECK(csv.rfind("a,b", 0) == 0);
}

TEST_CASE("format_metric") {
  CHECK(format_metric(0.12345) == "0.1235");
  CHECK(format_metric(0.12345, 2) == "0.12");
  CHECK(format_metric(1.0) == "1.0000");
  CHECK(format_metric(std::numeric_limits<double>::quiet_NaN()) == "-");
}

TEST_CASE("joint groups pool the right keypoints") {
  const std::map<std::string, double> per_keypoint{
      {"left_shoulder", 0.8}, {"right_shoulder", 0.6},
      {"head_top", 1.0},      {"upper_neck", 0.5},
      {"nose", 0.4},          {"pelvis", 0.2},
      {"thorax", 0.4},        {"left_knee", 0.9},
  };
  const auto groups = joint_group_means(per_keypoint);
  CHECK(groups.at("Shoulder") == doctest::Approx(0.7));
  CHECK(groups.at("Head") == doctest::Approx(0.75));
  CHECK(groups.at("Face") == doctest::Approx(0.4));
  CHECK(groups.at("Trunk") == doctest::Approx(0.3));
  CHECK(groups.at("Knee") == doctest::Approx(0.9));
  CHECK_FALSE(groups.contains("Ankle"));
  CHECK_FALSE(groups.contains("Wrist"));
}

TEST_CASE("summary row pulls headline metrics") {
  const auto result = train(tiny_config());
  const auto row = summary_row("student", result.log.final_eval);
  CHECK(row.method == "student");
  CHECK(row.pck ==
        doctest::Approx(result.log.final_eval.full_pck.means.at("pck")));
  CHECK(row.ap == doctest::Approx(result.log.final_eval.b_ap.means.at("ap")));
  CHECK(row.keypoints == result.log.final_eval.full_pck.per_keypoint.size());
  CHECK(row.avg() == doctest::Approx(50.0 * (row.pck + row.ap)));

  SummaryRow blank;
  CHECK(std::isnan(blank.pck));
  CHECK(std::isnan(blank.avg()));

  const auto table = render_summary_table({row});
  CHECK(table.find("Method") != std::string::npos);
  CHECK(table.find("student") != std::string::npos);
  CHECK(table.find("Avg") != std::string::npos);
  const auto csv = render_summary_csv({row});
  CHECK(csv.find("student") != std::string::npos);
}

TEST_CASE("run log renders in all three formats") {
  auto cfg = tiny_config();
  cfg.eval_every = 1;
  const auto result = train(cfg);

  const auto as_json = render_run_log(result.log, "json");
  CHECK(as_json == run_log_to_json(result.log));
  CHECK(json::parse(as_json).is_object());

  const auto as_text = render_run_log(result.log, "text");
  CHECK(as_text.find(result.log.config_digest) != std::string::npos);
  CHECK(as_text.find("epoch") != std::string::npos);

  const auto as_csv = render_run_log(result.log, "csv");
  std::istringstream lines(as_csv);
  std::string header;
  std::getline(lines, header);
  CHECK(header.rfind("epoch,total,ck", 0) == 0);
  std::size_t rows = 0;
  for (std::string line; std::getline(lines, line);) rows += !line.empty();
  CHECK(rows == cfg.epochs);

  CHECK_THROWS_AS(render_run_log(result.log, "yaml"), ConfigError);
}

TEST_CASE("eval report renders in all three formats") {
  EvalReport report;
  report.per_keypoint = {{"nose", 0.5}, {"left_knee", 1.0}};
  report.means = {{"pck", 0.75}};
  report.instances = 3;
  report.skipped = 1;
  report.keypoints = 6;

  const auto as_json = render_eval_report(report, "json");
  const auto doc = json::parse(as_json);
  CHECK(doc.at("counts").at("instances") == 3);
  CHECK(doc.at("means").at("pck") == 0.75);

  const auto as_text = render_eval_report(report, "text");
  CHECK(as_text.find("nose") != std::string::npos);
  CHECK(as_text.find("0.7500") != std::string::npos);
  CHECK(as_text.find("skipped") != std::string::npos);

  const auto as_csv = render_eval_report(report, "csv");
  CHECK(as_csv.find("mean,pck,0.75") != std::string::npos);
  CHECK(as_csv.find("keypoint,nose,0.5") != std::string::npos);

  CHECK_THROWS_AS(render_eval_report(report, "html"), ConfigError);
}

TEST_CASE("ablation rendering") {
  auto base = tiny_config();
  base.epochs = 1;
  AblationAxes axes;
  axes.distill = {false, true};
  const auto report = run_ablation_matrix(base, axes, {1});

  const auto as_text = render_ablation(report, "text");
  CHECK(as_text.find("Distill") != std::string::npos);
  CHECK(as_text.find("PCK0.1") != std::string::npos);

  const auto as_json = render_ablation(report, "json");
  CHECK(as_json == ablation_report_to_json(report));

  const auto as_csv = render_ablation(report, "csv");
  CHECK(as_csv.find("Distill") != std::string::npos);

  CHECK_THROWS_AS(render_ablation(report, "xml"), ConfigError);
}
