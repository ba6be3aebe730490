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

#include "poseunion/schema.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "poseunion/errors.hpp"
#include "poseunion/io_util.hpp"

namespace poseunion {

namespace {

bool is_lower_alnum_underscore(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

}  // namespace

bool KeypointName::is_valid(std::string_view name) {
  if (name.empty()) return false;
  if (!(name.front() >= 'a' && name.front() <= 'z')) return false;
  return std::all_of(name.begin(), name.end(), is_lower_alnum_underscore);
}

KeypointName::KeypointName(std::string name) : name_(std::move(name)) {
  if (!is_valid(name_)) {
    throw SchemaError("invalid keypoint name: \"" + name_ + "\"");
  }
}

SkeletonSchema::SkeletonSchema(std::string schema_id,
                               std::vector<KeypointName> names)
    : id(std::move(schema_id)), keypoints(std::move(names)) {
  if (id.empty()) throw SchemaError("schema id must be non-empty");
  if (keypoints.empty()) {
    throw SchemaError("schema \"" + id + "\" has no keypoints");
  }
  std::unordered_set<std::string_view> seen;
  for (const auto& kp : keypoints) {
    if (!seen.insert(kp.str()).second) {
      throw SchemaError("schema \"" + id + "\" repeats keypoint \"" +
                        kp.str() + "\"");
    }
  }
}

std::optional<std::size_t> SkeletonSchema::index_of(
    std::string_view name) const {
  for (std::size_t k = 0; k < keypoints.size(); ++k) {
    if (keypoints[k].str() == name) return k;
  }
  return std::nullopt;
}

bool SkeletonSchema::contains(std::string_view name) const {
  return index_of(name).has_value();
}

std::optional<std::size_t> UnionSchema::index_of(std::string_view name) const {
  for (std::size_t k = 0; k < keypoints.size(); ++k) {
    if (keypoints[k].str() == name) return k;
  }
  return std::nullopt;
}

std::vector<std::string> UnionSchema::names() const {
  std::vector<std::string> out;
  out.reserve(keypoints.size());
  for (const auto& kp : keypoints) out.push_back(kp.str());
  return out;
}

UnionSchema build_union(std::span<const SkeletonSchema> schemas) {
  if (schemas.empty()) {
    throw SchemaError("build_union requires at least one schema");
  }
  std::set<std::string> ids;
  for (const auto& s : schemas) {
    if (!ids.insert(s.id).second) {
      throw SchemaError("build_union got duplicate schema id \"" + s.id +
                        "\"");
    }
  }

  UnionSchema u;
  for (const auto& s : schemas) {
    for (const auto& kp : s.keypoints) {
      if (auto slot = u.index_of(kp.str())) {
        u.provenance[*slot].push_back(s.id);
      } else {
        u.keypoints.push_back(kp);
        u.provenance.push_back({s.id});
      }
    }
  }
  for (auto& sources : u.provenance) std::sort(sources.begin(), sources.end());
  return u;
}

UnionSchema build_union(std::initializer_list<SkeletonSchema> schemas) {
  return build_union(std::span<const SkeletonSchema>(schemas.begin(),
                                                     schemas.size()));
}

std::vector<KeypointName> overlap(const SkeletonSchema& a,
                                  const SkeletonSchema& b) {
  std::vector<KeypointName> out;
  for (const auto& kp : a.keypoints) {
    if (b.contains(kp.str())) out.push_back(kp);
  }
  return out;
}

std::vector<KeypointName> unique_to(const SkeletonSchema& a,
                                    const SkeletonSchema& b) {
  std::vector<KeypointName> out;
  for (const auto& kp : a.keypoints) {
    if (!b.contains(kp.str())) out.push_back(kp);
  }
  return out;
}

SchemaMapping mapping_into(const SkeletonSchema& source, const UnionSchema& u) {
  SchemaMapping m;
  m.source_id = source.id;
  m.index_map.reserve(source.size());
  for (const auto& kp : source.keypoints) {
    auto slot = u.index_of(kp.str());
    if (!slot) {
      throw SchemaError("schema \"" + source.id + "\" keypoint \"" +
                        kp.str() + "\" is not in the union");
    }
    m.index_map.push_back(*slot);
  }
  return m;
}

PartialMapping partial_mapping_into(const SkeletonSchema& source,
                                    const UnionSchema& u) {
  PartialMapping m;
  m.source_id = source.id;
  m.index_map.reserve(source.size());
  for (const auto& kp : source.keypoints) {
    auto slot = u.index_of(kp.str());
    m.index_map.push_back(slot);
    if (!slot) m.dropped.push_back(kp);
  }
  return m;
}

namespace {

std::vector<KeypointName> to_names(std::initializer_list<const char*> raw) {
  std::vector<KeypointName> out;
  out.reserve(raw.size());
  for (const char* name : raw) out.emplace_back(name);
  return out;
}

}  // namespace

SchemaRegistry SchemaRegistry::builtin() {
  SchemaRegistry reg;
  reg.add(SkeletonSchema(
      "coco17",
      to_names({"nose", "left_eye", "right_eye", "left_ear", "right_ear",
                "left_shoulder", "right_shoulder", "left_elbow", "right_elbow",
                "left_wrist", "right_wrist", "left_hip", "right_hip",
                "left_knee", "right_knee", "left_ankle", "right_ankle"})));
  reg.add(SkeletonSchema(
      "mpii16",
      to_names({"right_ankle", "right_knee", "right_hip", "left_hip",
                "left_knee", "left_ankle", "pelvis", "thorax", "upper_neck",
                "head_top", "right_wrist", "right_elbow", "right_shoulder",
                "left_shoulder", "left_elbow", "left_wrist"})));
  reg.add(SkeletonSchema(
      "halpe26",
      to_names({"nose", "left_eye", "right_eye", "left_ear", "right_ear",
                "left_shoulder", "right_shoulder", "left_elbow", "right_elbow",
                "left_wrist", "right_wrist", "left_hip", "right_hip",
                "left_knee", "right_knee", "left_ankle", "right_ankle",
                "head_top", "upper_neck", "pelvis", "left_big_toe",
                "right_big_toe", "left_small_toe", "right_small_toe",
                "left_heel", "right_heel"})));
  reg.add_alias("neck", "upper_neck");
  reg.add_alias("head", "head_top");
  reg.add_alias("hip", "pelvis");
  return reg;
}

void SchemaRegistry::add(SkeletonSchema schema) {
  auto id = schema.id;
  auto [it, inserted] = schemas_.emplace(std::move(id), std::move(schema));
  if (!inserted) {
    throw SchemaError("schema id \"" + it->first + "\" already registered");
  }
}

void SchemaRegistry::add_alias(std::string alias, std::string canonical) {
  if (!KeypointName::is_valid(alias) || !KeypointName::is_valid(canonical)) {
    throw SchemaError("alias \"" + alias + "\" -> \"" + canonical +
                      "\" is not a valid keypoint name pair");
  }
  if (auto it = aliases_.find(alias); it != aliases_.end()) {
    if (it->second != canonical) {
      throw SchemaError("alias \"" + it->first + "\" already maps to \"" +
                        it->second + "\"");
    }
    return;
  }
  aliases_.emplace(std::move(alias), std::move(canonical));
}

std::string SchemaRegistry::canonical_name(std::string_view name) const {
  std::string out;
  out.reserve(name.size());
  for (char c : name) {
    if (c == ' ' || c == '-') {
      out.push_back('_');
    } else {
      out.push_back(static_cast<char>(
          std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (auto it = aliases_.find(out); it != aliases_.end()) return it->second;
  return out;
}

bool SchemaRegistry::has(std::string_view id) const {
  return schemas_.find(id) != schemas_.end();
}

const SkeletonSchema& SchemaRegistry::get(std::string_view id) const {
  auto it = schemas_.find(id);
  if (it == schemas_.end()) {
    throw SchemaError("unknown schema id \"" + std::string(id) + "\"");
  }
  return it->second;
}

std::vector<std::string> SchemaRegistry::ids() const {
  std::vector<std::string> out;
  out.reserve(schemas_.size());
  for (const auto& [id, schema] : schemas_) out.push_back(id);
  return out;
}

const SkeletonSchema& SchemaRegistry::load_file(
    const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("schema file " + path.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("id") || !doc.contains("keypoints")) {
    throw FormatError("schema file " + path.string() +
                      ": expected object with \"id\" and \"keypoints\"");
  }
  if (doc.contains("aliases")) {
    for (const auto& [alias, canonical] :
         doc.at("aliases").get<std::map<std::string, std::string>>()) {
      add_alias(alias, canonical);
    }
  }
  std::vector<KeypointName> names;
  for (const auto& entry : doc.at("keypoints")) {
    names.emplace_back(canonical_name(entry.get<std::string>()));
  }
  std::string id = doc.at("id").get<std::string>();
  add(SkeletonSchema(id, std::move(names)));
  return get(id);
}

const SkeletonSchema& SchemaRegistry::resolve(const std::string& id_or_path) {
  if (has(id_or_path)) return get(id_or_path);
  if (std::filesystem::exists(id_or_path)) return load_file(id_or_path);
  throw SchemaError("\"" + id_or_path +
                    "\" is neither a registered schema id nor a schema file");
}

}  // namespace poseunion
