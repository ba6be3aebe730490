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

#include "poseunion/cli.hpp"

#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "poseunion/annotation.hpp"
#include "poseunion/errors.hpp"
#include "poseunion/experiment.hpp"
#include "poseunion/gradcheck.hpp"
#include "poseunion/io_util.hpp"
#include "poseunion/metrics.hpp"
#include "poseunion/model.hpp"
#include "poseunion/report.hpp"
#include "poseunion/schema.hpp"

namespace poseunion {

namespace {

using nlohmann::json;

/// Writes to the given path, or stdout when the path is empty. Text output
/// always ends with a newline.
void emit(std::string text, const std::string& out_path) {
  if (!text.empty() && text.back() != '\n') text += '\n';
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_file(out_path, text);
  }
}

/// Rebuilds a UnionSchema from the name list a unified file carries.
/// Provenance is reconstructed from built-in schema membership.
UnionSchema union_from_names(const std::vector<std::string>& names) {
  if (names.empty()) throw FormatError("unified file carries no keypoints");
  std::set<std::string> seen;
  std::vector<KeypointName> keypoints;
  for (const auto& name : names) {
    if (!seen.insert(name).second) {
      throw FormatError("duplicate keypoint \"" + name +
                        "\" in unified schema");
    }
    keypoints.emplace_back(name);
  }
  const auto registry = SchemaRegistry::builtin();
  const auto& coco = registry.get("coco17");
  const auto& mpii = registry.get("mpii16");
  std::vector<std::vector<std::string>> provenance;
  for (const auto& kp : keypoints) {
    std::vector<std::string> sources;
    if (coco.contains(kp.str())) sources.push_back("coco17");
    if (mpii.contains(kp.str())) sources.push_back("mpii16");
    provenance.push_back(std::move(sources));
  }
  return UnionSchema{std::move(keypoints), std::move(provenance)};
}

json names_json(const std::vector<KeypointName>& keypoints) {
  json out = json::array();
  for (const auto& kp : keypoints) out.push_back(kp.str());
  return out;
}

struct SchemaArgs {
  std::string op;
  std::string a;
  std::string b;
  bool as_json = false;
  std::string out_path;
};

void run_schema(const SchemaArgs& args) {
  auto registry = SchemaRegistry::builtin();
  const SkeletonSchema& sa = registry.resolve(args.a);
  const SkeletonSchema& sb = registry.resolve(args.b);

  if (args.op == "union") {
    const UnionSchema u = build_union({sa, sb});
    if (args.as_json) {
      json prov = json::array();
      for (const auto& sources : u.provenance) prov.push_back(sources);
      emit(json{{"op", "union"},
                {"a", sa.id},
                {"b", sb.id},
                {"size", u.size()},
                {"keypoints", names_json(u.keypoints)},
                {"provenance", std::move(prov)}}
               .dump(),
           args.out_path);
      return;
    }
    std::string text = "union of " + sa.id + " and " + sb.id + ": " +
                       std::to_string(u.size()) + " keypoints\n";
    TextTable table({"Slot", "Keypoint", "Sources"});
    for (std::size_t k = 0; k < u.size(); ++k) {
      std::string sources;
      for (const auto& s : u.provenance[k]) {
        if (!sources.empty()) sources += ' ';
        sources += s;
      }
      table.add_row({std::to_string(k), u.keypoints[k].str(), sources});
    }
    emit(text + table.render(), args.out_path);
    return;
  }

  if (args.op == "overlap") {
    const auto common = overlap(sa, sb);
    if (args.as_json) {
      emit(json{{"op", "overlap"},
                {"a", sa.id},
                {"b", sb.id},
                {"size", common.size()},
                {"keypoints", names_json(common)}}
               .dump(),
           args.out_path);
      return;
    }
    std::string text = "overlap of " + sa.id + " and " + sb.id + ": " +
                       std::to_string(common.size()) + " keypoints\n";
    for (const auto& kp : common) text += "  " + kp.str() + "\n";
    emit(std::move(text), args.out_path);
    return;
  }

  // diff
  const auto only_a = unique_to(sa, sb);
  const auto only_b = unique_to(sb, sa);
  if (args.as_json) {
    emit(json{{"op", "diff"},
              {"a", sa.id},
              {"b", sb.id},
              {"a_only", names_json(only_a)},
              {"b_only", names_json(only_b)},
              {"a_only_size", only_a.size()},
              {"b_only_size", only_b.size()}}
             .dump(),
         args.out_path);
    return;
  }
  std::string text = "only in " + sa.id + " (" +
                     std::to_string(only_a.size()) + "):\n";
  for (const auto& kp : only_a) text += "  " + kp.str() + "\n";
  text += "only in " + sb.id + " (" + std::to_string(only_b.size()) + "):\n";
  for (const auto& kp : only_b) text += "  " + kp.str() + "\n";
  emit(std::move(text), args.out_path);
}

struct ConvertArgs {
  std::string schema;
  std::string in_path;
  std::string out_path;
  bool synthesize = false;
  bool as_json = false;
};

void run_convert(const ConvertArgs& args) {
  auto registry = SchemaRegistry::builtin();
  const SkeletonSchema& source = registry.resolve(args.schema);
  const UnionSchema u =
      build_union({registry.get("coco17"), registry.get("mpii16")});

  const auto parsed = parse_keypoint_json(read_file(args.in_path), source);
  const PartialMapping mapping = partial_mapping_into(source, u);

  std::size_t dropped_points = 0;
  std::size_t thorax_count = 0;
  std::vector<UnifiedInstance> unified;
  unified.reserve(parsed.instances.size());
  for (const auto& raw : parsed.instances) {
    for (std::size_t k = 0; k < mapping.index_map.size(); ++k) {
      if (!mapping.index_map[k] && raw.triplets[k].v > 0) ++dropped_points;
    }
    UnifiedInstance inst = remap_to_union(raw, mapping, u.size());
    if (args.synthesize) {
      auto result = synthesize_thorax(inst, u);
      if (result.synthesized) ++thorax_count;
      inst = std::move(result.instance);
    }
    unified.push_back(std::move(inst));
  }
  write_file(args.out_path, write_unified(unified, u));

  if (dropped_points > 0) {
    std::string names;
    for (const auto& kp : mapping.dropped) {
      if (!names.empty()) names += ", ";
      names += kp.str();
    }
    std::cerr << "warning: dropped " << dropped_points
              << " labeled points on keypoints outside the union (" << names
              << ")\n";
  }

  if (args.as_json) {
    json dropped = json::array();
    for (const auto& kp : mapping.dropped) dropped.push_back(kp.str());
    emit(json{{"source", parsed.descriptor.id},
              {"instances", parsed.descriptor.instance_count},
              {"skipped", parsed.descriptor.skipped_count},
              {"crowds", parsed.descriptor.crowd_count},
              {"name_mismatches", parsed.descriptor.name_mismatches},
              {"dropped_keypoints", std::move(dropped)},
              {"dropped_points", dropped_points},
              {"thorax_synthesized", thorax_count},
              {"union_size", u.size()},
              {"file_digest", parsed.descriptor.file_digest}}
             .dump(),
         "");
    return;
  }
  std::cout << "converted " << parsed.descriptor.instance_count
            << " instances from " << parsed.descriptor.id << " into a "
            << u.size() << "-keypoint union (" << parsed.descriptor.skipped_count
            << " skipped";
  if (parsed.descriptor.crowd_count > 0) {
    std::cout << ", " << parsed.descriptor.crowd_count << " crowd regions";
  }
  if (thorax_count > 0) {
    std::cout << ", " << thorax_count << " thorax points synthesized";
  }
  std::cout << ")\n";
}

struct EvalArgs {
  std::string gt_path;
  std::string pred_path;
  std::string metric;
  std::string subset = "all";
  std::string sigmas_path;
  double threshold = 0.5;
  std::string format = "text";
  std::string out_path;
};

void run_eval(const EvalArgs& args) {
  const UnifiedFile gt = parse_unified(read_file(args.gt_path));
  const UnifiedFile pred = parse_unified(read_file(args.pred_path));
  if (gt.schema != pred.schema) {
    throw FormatError(
        "prediction and ground truth files carry different schemas");
  }
  const UnionSchema u = union_from_names(gt.schema);
  const auto slots = subset_slots(u, args.subset);

  EvalReport report;
  if (args.metric == "ap") {
    const OksParams params = args.sigmas_path.empty()
                                 ? default_sigmas(u)
                                 : parse_sigmas(u, read_file(args.sigmas_path));
    report = average_precision(pred.instances, gt.instances, params,
                               oks_thresholds(), slots);
  } else {
    PckConfig cfg;
    cfg.threshold = args.threshold;
    cfg.normalizer = args.metric == "pckh" ? PckNormalizer::head_segment
                                           : PckNormalizer::bbox_diag;
    report = pck(pred.instances, gt.instances, u, cfg, slots);
  }
  emit(render_eval_report(report, args.format), args.out_path);
}

struct GradcheckArgs {
  GradcheckConfig cfg;
  std::vector<std::string> families;
  bool as_json = false;
  std::string out_path;
};

int run_gradcheck_cmd(const GradcheckArgs& args) {
  const auto families =
      args.families.empty() ? gradcheck_families() : args.families;
  const auto results = run_gradcheck(families, args.cfg);

  bool all_pass = true;
  for (const auto& r : results) all_pass = all_pass && r.pass;

  if (args.as_json) {
    emit(gradcheck_results_to_json(results), args.out_path);
  } else {
    TextTable table({"Family", "Cases", "MaxRelErr", "Status"});
    for (const auto& r : results) {
      table.add_row({r.family, std::to_string(r.cases),
                     format_metric(r.max_rel_err, 9),
                     r.pass ? "pass" : "FAIL"});
    }
    emit(table.render(), args.out_path);
  }
  return all_pass ? 0 : 3;
}

struct TrainArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  std::size_t eval_every = 0;
  bool baseline = false;
  bool distill_on = false;
  bool distill_off = false;
  bool as_json = false;
  const CLI::Option* seed_opt = nullptr;
  const CLI::Option* epochs_opt = nullptr;
  const CLI::Option* eval_every_opt = nullptr;
};

void run_train(const TrainArgs& args) {
  ExperimentConfig config =
      args.config_path.empty()
          ? default_experiment_config()
          : parse_experiment_config(read_file(args.config_path));
  if (args.seed_opt && args.seed_opt->count() > 0) config.seed = args.seed;
  if (args.epochs_opt && args.epochs_opt->count() > 0) {
    config.epochs = args.epochs;
  }
  if (args.eval_every_opt && args.eval_every_opt->count() > 0) {
    config.eval_every = args.eval_every;
  }
  if (args.baseline) {
    config.train_count_b = 0;
    config.distill = false;
  }
  if (args.distill_on) config.distill = true;
  if (args.distill_off) config.distill = false;
  config.validate();

  const TrainResult result = train(config);
  const std::string digest = experiment_config_digest(config);

  if (!args.out_dir.empty()) {
    const std::filesystem::path dir(args.out_dir);
    write_file(dir / "runlog.json", run_log_to_json(result.log));
    write_file(dir / "report.txt", render_run_log(result.log, "text"));
    write_file(dir / "report.csv", render_run_log(result.log, "csv"));
    write_file(dir / "report.json",
               experiment_eval_to_json(result.log.final_eval));
    write_file(dir / "checkpoint.bin",
               serialize_checkpoint(result.state, digest));
  }

  if (args.as_json) {
    // Timing is deliberately left out so identical invocations print
    // identical bytes.
    emit(json{{"config_digest", digest},
              {"steps", result.log.steps.size()},
              {"final_eval",
               json::parse(experiment_eval_to_json(result.log.final_eval))}}
             .dump(),
         "");
    return;
  }
  std::cout << "run " << digest << ": " << result.log.steps.size()
            << " steps\n\n";
  std::cout << render_summary_table(
      {summary_row(config.distill ? "student+distill" : "student",
                   result.log.final_eval)});
}

struct AblateArgs {
  std::string config_path;
  std::vector<std::uint64_t> seeds;
  std::vector<double> alphas;
  std::vector<std::string> distill_values;
  std::string format = "text";
  std::string out_path;
  bool as_json = false;
};

void run_ablate(const AblateArgs& args) {
  ExperimentConfig base =
      args.config_path.empty()
          ? default_experiment_config()
          : parse_experiment_config(read_file(args.config_path));

  AblationAxes axes;
  for (const auto& v : args.distill_values) {
    axes.distill.push_back(v == "true" || v == "1");
  }
  axes.alphas = args.alphas;

  const std::vector<std::uint64_t> seeds =
      args.seeds.empty() ? std::vector<std::uint64_t>{base.seed} : args.seeds;
  const AblationReport report = run_ablation_matrix(base, axes, seeds);

  if (!args.out_path.empty()) {
    write_file(args.out_path, ablation_report_to_json(report));
  }
  emit(render_ablation(report, args.as_json ? "json" : args.format), "");
}

struct ReportArgs {
  std::string in_path;
  std::string format = "text";
  bool as_json = false;
  std::string out_path;
};

void run_report(const ReportArgs& args) {
  const RunLog log = parse_run_log(read_file(args.in_path));
  emit(render_run_log(log, args.as_json ? "json" : args.format),
       args.out_path);
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"poseunion: multi-dataset keypoint unification toolkit"};
  app.set_version_flag("--version", "poseunion 0.1.0");
  app.require_subcommand(1);
  int validation_rc = 0;

  SchemaArgs schema_args;
  auto* schema_cmd =
      app.add_subcommand("schema", "Skeleton set algebra over schemas");
  schema_cmd->add_option("op", schema_args.op, "union, overlap or diff")
      ->required()
      ->check(CLI::IsMember({"union", "overlap", "diff"}));
  schema_cmd->add_option("--a", schema_args.a, "first schema id or file")
      ->required();
  schema_cmd->add_option("--b", schema_args.b, "second schema id or file")
      ->required();
  schema_cmd->add_flag("--json", schema_args.as_json, "JSON output");
  schema_cmd->add_option("--out", schema_args.out_path, "output file");
  schema_cmd->callback([&] { run_schema(schema_args); });

  ConvertArgs convert_args;
  auto* convert_cmd = app.add_subcommand(
      "convert", "Convert a COCO-dialect annotation file to unified format");
  convert_cmd
      ->add_option("--schema", convert_args.schema, "source schema id or file")
      ->required();
  convert_cmd->add_option("--in", convert_args.in_path, "annotation JSON")
      ->required();
  convert_cmd->add_option("--out", convert_args.out_path, "unified JSON")
      ->required();
  convert_cmd->add_flag("--synthesize-thorax", convert_args.synthesize,
                        "fill unlabeled thorax from the shoulder midpoint");
  convert_cmd->add_flag("--json", convert_args.as_json, "JSON summary");
  convert_cmd->callback([&] { run_convert(convert_args); });

  EvalArgs eval_args;
  auto* eval_cmd =
      app.add_subcommand("eval", "Score predictions against ground truth");
  eval_cmd->add_option("--gt", eval_args.gt_path, "unified ground truth")
      ->required();
  eval_cmd->add_option("--pred", eval_args.pred_path, "unified predictions")
      ->required();
  eval_cmd->add_option("--metric", eval_args.metric, "ap, pck or pckh")
      ->required()
      ->check(CLI::IsMember({"ap", "pck", "pckh"}));
  eval_cmd->add_option("--subset", eval_args.subset, "keypoint subset")
      ->check(CLI::IsMember({"all", "coco", "mpii", "shared"}));
  eval_cmd->add_option("--sigmas", eval_args.sigmas_path,
                       "JSON file of per-keypoint OKS sigma overrides");
  eval_cmd->add_option("--threshold", eval_args.threshold,
                       "PCK threshold (ignored for ap)");
  eval_cmd->add_option("--format", eval_args.format, "text, csv or json")
      ->check(CLI::IsMember({"text", "csv", "json"}));
  auto* eval_json =
      eval_cmd->add_flag("--json", "shorthand for --format json");
  eval_cmd->add_option("--out", eval_args.out_path, "output file");
  eval_cmd->callback([&, eval_json] {
    if (eval_json->count() > 0) eval_args.format = "json";
    run_eval(eval_args);
  });

  GradcheckArgs gradcheck_args;
  auto* gradcheck_cmd = app.add_subcommand(
      "gradcheck", "Verify analytic gradients by central differences");
  gradcheck_cmd->add_option("--tol", gradcheck_args.cfg.tolerance,
                            "max relative error");
  gradcheck_cmd->add_option("--step", gradcheck_args.cfg.step,
                            "finite difference step");
  gradcheck_cmd->add_option("--cases", gradcheck_args.cfg.cases,
                            "cases per family");
  gradcheck_cmd->add_option("--seed", gradcheck_args.cfg.seed, "random seed");
  gradcheck_cmd
      ->add_option("--families", gradcheck_args.families,
                   "subset of families to run")
      ->delimiter(',')
      ->check(CLI::IsMember(gradcheck_families()));
  gradcheck_cmd->add_flag(
      "--inject-fault", gradcheck_args.cfg.inject_fault,
      "negate one analytic component per case; the run must then fail");
  gradcheck_cmd->add_flag("--json", gradcheck_args.as_json, "JSON output");
  gradcheck_cmd->add_option("--out", gradcheck_args.out_path, "output file");
  gradcheck_cmd->callback(
      [&] { validation_rc = run_gradcheck_cmd(gradcheck_args); });

  TrainArgs train_args;
  auto* train_cmd =
      app.add_subcommand("train", "Train the student on synthetic data");
  train_cmd->add_option("--config", train_args.config_path,
                        "experiment config JSON");
  train_args.seed_opt =
      train_cmd->add_option("--seed", train_args.seed, "seed override");
  train_args.epochs_opt =
      train_cmd->add_option("--epochs", train_args.epochs, "epoch override");
  train_args.eval_every_opt = train_cmd->add_option(
      "--eval-every", train_args.eval_every, "snapshot interval override");
  train_cmd->add_option("--out", train_args.out_dir,
                        "output directory (runlog, reports, checkpoint)");
  train_cmd->add_flag("--baseline", train_args.baseline,
                      "dataset A only, no distillation");
  auto* don = train_cmd->add_flag("--distill", train_args.distill_on,
                                  "force distillation on");
  train_cmd->add_flag("--no-distill", train_args.distill_off,
                      "force distillation off")
      ->excludes(don);
  train_cmd->add_flag("--json", train_args.as_json, "JSON summary");
  train_cmd->callback([&] { run_train(train_args); });

  AblateArgs ablate_args;
  auto* ablate_cmd = app.add_subcommand(
      "ablate", "Sweep loss weights and distillation on/off");
  ablate_cmd->add_option("--config", ablate_args.config_path,
                         "base experiment config JSON");
  ablate_cmd->add_option("--seeds", ablate_args.seeds, "seeds to average")
      ->delimiter(',');
  ablate_cmd->add_option("--alphas", ablate_args.alphas, "alpha grid")
      ->delimiter(',');
  ablate_cmd
      ->add_option("--distill-values", ablate_args.distill_values,
                   "distill axis, e.g. true,false")
      ->delimiter(',')
      ->check(CLI::IsMember({"true", "false", "0", "1"}));
  ablate_cmd->add_option("--format", ablate_args.format, "text, csv or json")
      ->check(CLI::IsMember({"text", "csv", "json"}));
  ablate_cmd->add_option("--out", ablate_args.out_path,
                         "write the full JSON report here");
  ablate_cmd->add_flag("--json", ablate_args.as_json, "JSON output");
  ablate_cmd->callback([&] { run_ablate(ablate_args); });

  ReportArgs report_args;
  auto* report_cmd =
      app.add_subcommand("report", "Render a training run log");
  report_cmd->add_option("--in", report_args.in_path, "runlog.json path")
      ->required();
  report_cmd->add_option("--format", report_args.format, "text, csv or json")
      ->check(CLI::IsMember({"text", "csv", "json"}));
  report_cmd->add_flag("--json", report_args.as_json,
                       "shorthand for --format json");
  report_cmd->add_option("--out", report_args.out_path, "output file");
  report_cmd->callback([&] { run_report(report_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return validation_rc;
}

}  // namespace poseunion
