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

#include "poseunion/annotation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "poseunion/errors.hpp"
#include "poseunion/io_util.hpp"

namespace poseunion {

using nlohmann::json;

double Bbox::diag() const { return std::sqrt(w * w + h * h); }

std::size_t UnifiedInstance::labeled_count() const {
  return static_cast<std::size_t>(
      std::count(mask.begin(), mask.end(), true));
}

UnifiedInstance make_unified(std::size_t size) {
  UnifiedInstance inst;
  inst.coords.assign(size, Point2{});
  inst.mask.assign(size, false);
  inst.vis.assign(size, 0);
  return inst;
}

namespace {

std::string annotation_label(const json& ann) {
  if (ann.contains("id") && ann.at("id").is_number()) {
    return "annotation " + std::to_string(ann.at("id").get<std::int64_t>());
  }
  return "annotation <no id>";
}

RawInstance parse_annotation(const json& ann, const SkeletonSchema& schema) {
  RawInstance raw;
  raw.source_id = schema.id;
  if (ann.contains("id")) raw.annotation_id = ann.at("id").get<std::int64_t>();
  if (!ann.contains("image_id")) {
    throw FormatError(annotation_label(ann) + ": missing image_id");
  }
  raw.image_id = ann.at("image_id").get<std::int64_t>();

  if (!ann.contains("bbox")) {
    throw FormatError(annotation_label(ann) + ": missing bbox");
  }
  const auto& bbox = ann.at("bbox");
  if (!bbox.is_array() || bbox.size() != 4) {
    throw FormatError(annotation_label(ann) + ": bbox must be [x,y,w,h]");
  }
  raw.bbox = Bbox{bbox[0].get<double>(), bbox[1].get<double>(),
                  bbox[2].get<double>(), bbox[3].get<double>()};
  if (!(raw.bbox.w > 0.0) || !(raw.bbox.h > 0.0)) {
    throw FormatError(annotation_label(ann) + ": bbox has non-positive size");
  }
  raw.area = ann.contains("area") ? ann.at("area").get<double>()
                                  : raw.bbox.w * raw.bbox.h;

  const auto& kps = ann.at("keypoints");
  if (!kps.is_array() || kps.size() != 3 * schema.size()) {
    throw FormatError(annotation_label(ann) + ": keypoints length " +
                      std::to_string(kps.size()) + " != " +
                      std::to_string(3 * schema.size()) + " (3 x " +
                      std::to_string(schema.size()) + " for schema \"" +
                      schema.id + "\")");
  }
  raw.triplets.resize(schema.size());
  for (std::size_t k = 0; k < schema.size(); ++k) {
    auto& t = raw.triplets[k];
    t.x = kps[3 * k].get<double>();
    t.y = kps[3 * k + 1].get<double>();
    t.v = kps[3 * k + 2].get<int>();
    if (t.v < 0 || t.v > 2) {
      throw FormatError(annotation_label(ann) + ": visibility flag " +
                        std::to_string(t.v) + " outside {0,1,2}");
    }
  }
  return raw;
}

std::size_t count_category_mismatches(const json& doc,
                                      const SkeletonSchema& schema) {
  if (!doc.contains("categories")) return 0;
  const auto& cats = doc.at("categories");
  if (!cats.is_array() || cats.empty() || !cats[0].contains("keypoints")) {
    return 0;
  }
  const auto& names = cats[0].at("keypoints");
  if (names.size() != schema.size()) {
    throw FormatError("categories[0].keypoints has " +
                      std::to_string(names.size()) + " names, schema \"" +
                      schema.id + "\" has " + std::to_string(schema.size()));
  }
  const auto registry = SchemaRegistry::builtin();
  std::size_t mismatches = 0;
  for (std::size_t k = 0; k < schema.size(); ++k) {
    const auto canonical = registry.canonical_name(names[k].get<std::string>());
    if (canonical != schema.keypoints[k].str()) ++mismatches;
  }
  return mismatches;
}

}  // namespace

ParsedAnnotations parse_keypoint_json(std::string_view bytes,
                                      const SkeletonSchema& schema) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw FormatError("annotation JSON parse failed at byte " +
                      std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("annotations") ||
      !doc.at("annotations").is_array()) {
    throw FormatError("annotation JSON needs a top-level annotations array");
  }

  ParsedAnnotations out{
      DatasetDescriptor{schema.id, schema, 0, 0, 0,
                        count_category_mismatches(doc, schema),
                        fnv1a64_hex(bytes)},
      {}};

  for (const auto& ann : doc.at("annotations")) {
    if (ann.value("iscrowd", 0) != 0) {
      ++out.descriptor.crowd_count;
      ++out.descriptor.skipped_count;
      continue;
    }
    if (!ann.contains("keypoints")) {
      throw FormatError(annotation_label(ann) + ": missing keypoints");
    }
    int num_keypoints = ann.value("num_keypoints", -1);
    if (num_keypoints == 0) {
      ++out.descriptor.skipped_count;
      continue;
    }
    out.instances.push_back(parse_annotation(ann, schema));
  }
  out.descriptor.instance_count = out.instances.size();
  return out;
}

std::string write_keypoint_json(const std::vector<RawInstance>& instances,
                                const SkeletonSchema& schema) {
  json annotations = json::array();
  std::set<std::int64_t> image_ids;
  for (const auto& raw : instances) {
    json kps = json::array();
    int num_labeled = 0;
    for (const auto& t : raw.triplets) {
      kps.push_back(t.x);
      kps.push_back(t.y);
      kps.push_back(t.v);
      if (t.v > 0) ++num_labeled;
    }
    annotations.push_back({
        {"id", raw.annotation_id},
        {"image_id", raw.image_id},
        {"category_id", 1},
        {"bbox", {raw.bbox.x, raw.bbox.y, raw.bbox.w, raw.bbox.h}},
        {"area", raw.area},
        {"iscrowd", 0},
        {"num_keypoints", num_labeled},
        {"keypoints", std::move(kps)},
    });
    image_ids.insert(raw.image_id);
  }

  json images = json::array();
  for (const auto id : image_ids) images.push_back({{"id", id}});

  json keypoint_names = json::array();
  for (const auto& kp : schema.keypoints) keypoint_names.push_back(kp.str());

  const json doc = {
      {"images", std::move(images)},
      {"annotations", std::move(annotations)},
      {"categories",
       json::array({{{"id", 1},
                     {"name", "person"},
                     {"keypoints", std::move(keypoint_names)}}})},
  };
  return doc.dump();
}

namespace {

UnifiedInstance remap_common(const RawInstance& raw, std::size_t union_size) {
  UnifiedInstance inst = make_unified(union_size);
  inst.image_id = raw.image_id;
  inst.bbox = raw.bbox;
  inst.area = raw.area;
  return inst;
}

void place_triplet(UnifiedInstance& inst, std::size_t slot,
                   const KeypointTriplet& t) {
  if (slot >= inst.coords.size()) {
    throw ContractError("union slot " + std::to_string(slot) +
                        " out of range for union size " +
                        std::to_string(inst.coords.size()));
  }
  if (t.v > 0) {
    inst.coords[slot] = Point2{t.x, t.y};
    inst.mask[slot] = true;
    inst.vis[slot] = t.v;
  }
}

}  // namespace

UnifiedInstance remap_to_union(const RawInstance& raw,
                               const SchemaMapping& mapping,
                               std::size_t union_size) {
  if (mapping.source_id != raw.source_id) {
    throw ContractError("mapping for \"" + mapping.source_id +
                        "\" applied to instance from \"" + raw.source_id +
                        "\"");
  }
  if (mapping.index_map.size() != raw.triplets.size()) {
    throw ContractError("mapping covers " +
                        std::to_string(mapping.index_map.size()) +
                        " keypoints, instance has " +
                        std::to_string(raw.triplets.size()));
  }
  UnifiedInstance inst = remap_common(raw, union_size);
  for (std::size_t k = 0; k < raw.triplets.size(); ++k) {
    place_triplet(inst, mapping.index_map[k], raw.triplets[k]);
  }
  return inst;
}

UnifiedInstance remap_to_union(const RawInstance& raw,
                               const PartialMapping& mapping,
                               std::size_t union_size) {
  if (mapping.source_id != raw.source_id) {
    throw ContractError("mapping for \"" + mapping.source_id +
                        "\" applied to instance from \"" + raw.source_id +
                        "\"");
  }
  if (mapping.index_map.size() != raw.triplets.size()) {
    throw ContractError("mapping covers " +
                        std::to_string(mapping.index_map.size()) +
                        " keypoints, instance has " +
                        std::to_string(raw.triplets.size()));
  }
  UnifiedInstance inst = remap_common(raw, union_size);
  for (std::size_t k = 0; k < raw.triplets.size(); ++k) {
    if (mapping.index_map[k]) {
      place_triplet(inst, *mapping.index_map[k], raw.triplets[k]);
    }
  }
  return inst;
}

ThoraxResult synthesize_thorax(const UnifiedInstance& inst,
                               const UnionSchema& u) {
  ThoraxResult result{inst, false};
  const auto thorax = u.index_of("thorax");
  const auto ls = u.index_of("left_shoulder");
  const auto rs = u.index_of("right_shoulder");
  if (!thorax || !ls || !rs) return result;
  if (inst.mask.size() != u.size()) {
    throw ContractError("instance has " + std::to_string(inst.mask.size()) +
                        " slots, union has " + std::to_string(u.size()));
  }
  if (inst.mask[*thorax] || !inst.mask[*ls] || !inst.mask[*rs]) return result;

  const Point2 a = inst.coords[*ls];
  const Point2 b = inst.coords[*rs];
  result.instance.coords[*thorax] = Point2{(a.x + b.x) / 2.0,
                                           (a.y + b.y) / 2.0};
  result.instance.mask[*thorax] = true;
  result.instance.vis[*thorax] = std::min(inst.vis[*ls], inst.vis[*rs]);
  result.synthesized = true;
  return result;
}

UnifiedInstance bbox_normalized(const UnifiedInstance& inst) {
  if (!(inst.bbox.w > 0.0) || !(inst.bbox.h > 0.0)) {
    throw ContractError("bbox_normalized needs a positive-size bbox");
  }
  UnifiedInstance out = inst;
  for (std::size_t k = 0; k < inst.coords.size(); ++k) {
    if (inst.mask[k]) {
      out.coords[k] = Point2{(inst.coords[k].x - inst.bbox.x) / inst.bbox.w,
                             (inst.coords[k].y - inst.bbox.y) / inst.bbox.h};
    }
  }
  out.bbox = Bbox{0.0, 0.0, 1.0, 1.0};
  out.area = 1.0;
  return out;
}

std::string write_unified(const std::vector<UnifiedInstance>& instances,
                          const UnionSchema& u) {
  json inst_array = json::array();
  for (const auto& inst : instances) {
    if (inst.coords.size() != u.size() || inst.mask.size() != u.size() ||
        inst.vis.size() != u.size()) {
      throw ContractError("instance not sized to the union (" +
                          std::to_string(u.size()) + " slots)");
    }
    json coords = json::array();
    for (const auto& p : inst.coords) coords.push_back({p.x, p.y});
    json entry = {
        {"image_id", inst.image_id},
        {"bbox", {inst.bbox.x, inst.bbox.y, inst.bbox.w, inst.bbox.h}},
        {"area", inst.area},
        {"coords", std::move(coords)},
        {"mask", inst.mask},
        {"vis", inst.vis},
    };
    if (inst.score != 1.0) entry["score"] = inst.score;
    inst_array.push_back(std::move(entry));
  }
  const json doc = {{"schema", u.names()}, {"instances", std::move(inst_array)}};
  return doc.dump();
}

UnifiedFile parse_unified(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw FormatError("unified JSON parse failed at byte " +
                      std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("schema") ||
      !doc.contains("instances")) {
    throw FormatError("unified JSON needs \"schema\" and \"instances\"");
  }

  UnifiedFile out;
  for (const auto& name : doc.at("schema")) {
    out.schema.push_back(name.get<std::string>());
  }
  const std::size_t size = out.schema.size();

  for (const auto& entry : doc.at("instances")) {
    UnifiedInstance inst;
    inst.image_id = entry.at("image_id").get<std::int64_t>();
    const auto& bbox = entry.at("bbox");
    if (!bbox.is_array() || bbox.size() != 4) {
      throw FormatError("unified instance bbox must be [x,y,w,h]");
    }
    inst.bbox = Bbox{bbox[0].get<double>(), bbox[1].get<double>(),
                     bbox[2].get<double>(), bbox[3].get<double>()};
    inst.area = entry.at("area").get<double>();
    for (const auto& pair : entry.at("coords")) {
      if (!pair.is_array() || pair.size() != 2) {
        throw FormatError("unified instance coords entries must be [x,y]");
      }
      inst.coords.push_back(Point2{pair[0].get<double>(), pair[1].get<double>()});
    }
    inst.mask = entry.at("mask").get<std::vector<bool>>();
    inst.vis = entry.at("vis").get<std::vector<int>>();
    inst.score = entry.value("score", 1.0);
    if (inst.coords.size() != size || inst.mask.size() != size ||
        inst.vis.size() != size) {
      throw FormatError("unified instance arrays must all have " +
                        std::to_string(size) + " entries");
    }
    for (std::size_t k = 0; k < size; ++k) {
      if (!inst.mask[k] && (inst.coords[k] != Point2{} || inst.vis[k] != 0)) {
        throw FormatError("unified instance slot " + std::to_string(k) +
                          " is unmasked but carries data");
      }
    }
    out.instances.push_back(std::move(inst));
  }
  return out;
}

}  // namespace poseunion
