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

#include "poseunion/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "poseunion/errors.hpp"

namespace poseunion {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

double mean_of(const EvalReport& report, const char* key) {
  const auto it = report.means.find(key);
  return it == report.means.end() ? kMissing : it->second;
}

std::string csv_field(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

const std::vector<std::pair<std::string, std::vector<std::string>>>&
joint_groups() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>>
      groups = {
          {"Head", {"head_top", "upper_neck"}},
          {"Face", {"nose", "left_eye", "right_eye", "left_ear", "right_ear"}},
          {"Shoulder", {"left_shoulder", "right_shoulder"}},
          {"Elbow", {"left_elbow", "right_elbow"}},
          {"Wrist", {"left_wrist", "right_wrist"}},
          {"Trunk", {"pelvis", "thorax"}},
          {"Hip", {"left_hip", "right_hip"}},
          {"Knee", {"left_knee", "right_knee"}},
          {"Ankle", {"left_ankle", "right_ankle"}},
      };
  return groups;
}

}  // namespace

TextTable::TextTable(std::vector<std::string> header)
    : header_(std::move(header)) {
  if (header_.empty()) throw ContractError("table needs at least one column");
}

void TextTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) {
    throw ContractError("table row has " + std::to_string(cells.size()) +
                        " cells, header has " +
                        std::to_string(header_.size()));
  }
  rows_.push_back(std::move(cells));
}

std::string TextTable::render() const {
  std::vector<std::size_t> widths(header_.size());
  for (std::size_t c = 0; c < header_.size(); ++c) {
    widths[c] = header_[c].size();
  }
  for (const auto& row : rows_) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      widths[c] = std::max(widths[c], row[c].size());
    }
  }
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c > 0) out << "  ";
      out << cells[c];
      if (c + 1 < cells.size()) {
        out << std::string(widths[c] - cells[c].size(), ' ');
      }
    }
    out << '\n';
  };
  emit(header_);
  std::string rule;
  for (std::size_t c = 0; c < widths.size(); ++c) {
    if (c > 0) rule += "  ";
    rule += std::string(widths[c], '-');
  }
  out << rule << '\n';
  for (const auto& row : rows_) emit(row);
  return out.str();
}

std::string TextTable::render_csv() const {
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c > 0) out << ',';
      out << csv_field(cells[c]);
    }
    out << '\n';
  };
  emit(header_);
  for (const auto& row : rows_) emit(row);
  return out.str();
}

std::string format_metric(double value, int precision) {
  if (std::isnan(value)) return "-";
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(precision);
  out << value;
  return out.str();
}

std::map<std::string, double> joint_group_means(
    const std::map<std::string, double>& per_keypoint) {
  std::map<std::string, double> out;
  for (const auto& [group, members] : joint_groups()) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& name : members) {
      const auto it = per_keypoint.find(name);
      if (it == per_keypoint.end()) continue;
      sum += it->second;
      ++count;
    }
    if (count > 0) out[group] = sum / static_cast<double>(count);
  }
  return out;
}

SummaryRow::SummaryRow()
    : pck(kMissing),
      pck01(kMissing),
      ap(kMissing),
      ap50(kMissing),
      ap75(kMissing),
      ar(kMissing),
      ar50(kMissing),
      ar75(kMissing) {}

double SummaryRow::avg() const {
  if (std::isnan(pck) || std::isnan(ap)) return kMissing;
  return 0.5 * (pck + ap) * 100.0;
}

SummaryRow summary_row(std::string method, const ExperimentEval& eval) {
  SummaryRow row;
  row.method = std::move(method);
  row.pck = mean_of(eval.full_pck, "pck");
  row.pck01 = mean_of(eval.full_pck01, "pck");
  row.ap = mean_of(eval.b_ap, "ap");
  row.ap50 = mean_of(eval.b_ap, "ap50");
  row.ap75 = mean_of(eval.b_ap, "ap75");
  row.ar = mean_of(eval.b_ap, "ar");
  row.ar50 = mean_of(eval.b_ap, "ar50");
  row.ar75 = mean_of(eval.b_ap, "ar75");
  row.keypoints = eval.full_pck.per_keypoint.size();
  return row;
}

namespace {

TextTable summary_table(const std::vector<SummaryRow>& rows) {
  TextTable table({"Method", "PCK", "PCK0.1", "AP", "AP50", "AP75", "AR",
                   "AR50", "AR75", "Kpts", "Avg"});
  for (const auto& row : rows) {
    table.add_row({row.method, format_metric(row.pck),
                   format_metric(row.pck01), format_metric(row.ap),
                   format_metric(row.ap50), format_metric(row.ap75),
                   format_metric(row.ar), format_metric(row.ar50),
                   format_metric(row.ar75), std::to_string(row.keypoints),
                   format_metric(row.avg(), 1)});
  }
  return table;
}

void require_known_format(std::string_view format) {
  if (format != "text" && format != "csv" && format != "json") {
    throw ConfigError("unknown report format \"" + std::string(format) +
                      "\" (expected text, csv or json)");
  }
}

std::string eval_text(const ExperimentEval& eval) {
  std::ostringstream out;
  out << render_summary_table({summary_row("student", eval)});

  out << "\nPCKh@0.5 on dataset-A labels: "
      << format_metric(mean_of(eval.a_pckh, "pck"))
      << "  (@0.1: " << format_metric(mean_of(eval.a_pckh01, "pck")) << ")\n";

  const auto groups = joint_group_means(eval.full_pck01.per_keypoint);
  if (!groups.empty()) {
    out << "\nPCK@0.1 by joint group, full 21-point truth:\n";
    TextTable table({"Group", "PCK0.1"});
    for (const auto& [group, members] : joint_groups()) {
      const auto it = groups.find(group);
      if (it == groups.end()) continue;
      table.add_row({group, format_metric(it->second)});
    }
    out << table.render();
  }

  if (!eval.full_pck01.per_keypoint.empty()) {
    out << "\nPCK@0.1 per keypoint, full 21-point truth:\n";
    TextTable table({"Keypoint", "PCK0.1"});
    for (const auto& [name, value] : eval.full_pck01.per_keypoint) {
      table.add_row({name, format_metric(value)});
    }
    out << table.render();
  }
  return out.str();
}

}  // namespace

std::string render_summary_table(const std::vector<SummaryRow>& rows) {
  return summary_table(rows).render();
}

std::string render_summary_csv(const std::vector<SummaryRow>& rows) {
  return summary_table(rows).render_csv();
}

std::string render_run_log(const RunLog& log, std::string_view format) {
  require_known_format(format);
  if (format == "json") return run_log_to_json(log);

  std::vector<std::string> kl_ids;
  if (!log.epochs.empty()) {
    for (const auto& [id, v] : log.epochs.front().kl) kl_ids.push_back(id);
  }

  if (format == "csv") {
    std::vector<std::string> header = {"epoch", "total", "ck"};
    for (const auto& id : kl_ids) header.push_back("kl_" + id);
    TextTable table(std::move(header));
    for (const auto& e : log.epochs) {
      std::vector<std::string> row = {std::to_string(e.epoch),
                                      format_metric(e.total, 6),
                                      format_metric(e.ck, 6)};
      for (const auto& id : kl_ids) {
        const auto it = e.kl.find(id);
        row.push_back(
            format_metric(it == e.kl.end() ? kMissing : it->second, 6));
      }
      table.add_row(std::move(row));
    }
    return table.render_csv();
  }

  std::ostringstream out;
  out << "run " << log.config_digest << "\n";
  // Wall time stays in the run log's timing block; rendered reports must be
  // bit-identical across same-seed reruns.
  out << "steps: " << log.steps.size() << "  epochs: " << log.epochs.size()
      << "\n";
  if (!log.epochs.empty()) {
    const auto& first = log.epochs.front();
    const auto& last = log.epochs.back();
    out << "loss: " << format_metric(first.total, 6) << " -> "
        << format_metric(last.total, 6) << " over " << log.epochs.size()
        << " epochs\n";
  }
  if (!log.snapshots.empty()) {
    out << "\nEval snapshots, full-truth PCK@0.1:\n";
    TextTable table({"Epoch", "PCK0.1", "A-PCKh", "B-AP"});
    for (const auto& s : log.snapshots) {
      table.add_row({std::to_string(s.epoch),
                     format_metric(mean_of(s.eval.full_pck01, "pck")),
                     format_metric(mean_of(s.eval.a_pckh, "pck")),
                     format_metric(mean_of(s.eval.b_ap, "ap"))});
    }
    out << table.render();
  }
  out << "\nFinal eval:\n" << eval_text(log.final_eval);
  return out.str();
}

std::string render_eval_report(const EvalReport& report,
                               std::string_view format) {
  require_known_format(format);
  if (format == "json") return eval_report_to_json(report);

  TextTable means({"Metric", "Value"});
  for (const auto& [key, value] : report.means) {
    means.add_row({key, format_metric(value)});
  }
  TextTable per_kp({"Keypoint", "Value"});
  for (const auto& [name, value] : report.per_keypoint) {
    per_kp.add_row({name, format_metric(value)});
  }

  if (format == "csv") {
    TextTable table({"kind", "name", "value"});
    for (const auto& [key, value] : report.means) {
      table.add_row({"mean", key, format_metric(value, 6)});
    }
    for (const auto& [name, value] : report.per_keypoint) {
      table.add_row({"keypoint", name, format_metric(value, 6)});
    }
    table.add_row({"count", "instances", std::to_string(report.instances)});
    table.add_row({"count", "skipped", std::to_string(report.skipped)});
    table.add_row({"count", "keypoints", std::to_string(report.keypoints)});
    return table.render_csv();
  }

  std::ostringstream out;
  out << "instances: " << report.instances << "  skipped: " << report.skipped
      << "  labeled keypoints: " << report.keypoints << "\n\n";
  out << means.render();
  if (!report.per_keypoint.empty()) {
    out << '\n' << per_kp.render();
  }
  return out.str();
}

std::string render_ablation(const AblationReport& report,
                            std::string_view format) {
  require_known_format(format);
  if (format == "json") return ablation_report_to_json(report);

  auto cell_stat = [](const AblationCell& cell, const char* key) {
    const auto it = cell.aggregates.find(key);
    return it == cell.aggregates.end()
               ? std::pair<double, double>{kMissing, kMissing}
               : it->second;
  };
  auto betas_label = [](const std::map<std::string, double>& betas) {
    if (betas.empty()) return std::string("-");
    std::string out;
    for (const auto& [id, v] : betas) {
      if (!out.empty()) out += ' ';
      out += id + "=" + format_metric(v, 2);
    }
    return out;
  };

  TextTable table({"Distill", "Alpha", "Betas", "Seeds", "PCK0.1", "+/-",
                   "A-PCKh", "B-AP", "Errors"});
  for (const auto& cell : report.cells) {
    const auto full01 = cell_stat(cell, "full_pck01");
    const auto pckh = cell_stat(cell, "a_pckh");
    const auto ap = cell_stat(cell, "b_ap");
    const auto failures = static_cast<std::size_t>(
        std::count_if(cell.errors.begin(), cell.errors.end(),
                      [](const std::string& e) { return !e.empty(); }));
    table.add_row({cell.distill ? "yes" : "no", format_metric(cell.alpha, 2),
                   betas_label(cell.betas), std::to_string(cell.seeds.size()),
                   format_metric(full01.first), format_metric(full01.second),
                   format_metric(pckh.first), format_metric(ap.first),
                   std::to_string(failures)});
  }
  return format == "csv" ? table.render_csv() : table.render();
}

}  // namespace poseunion
