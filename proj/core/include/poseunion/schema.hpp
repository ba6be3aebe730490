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

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace poseunion {

/// Canonical keypoint identifier. Lowercase `[a-z][a-z0-9_]*`; equality is
/// exact string equality and is the identity used by all set operations.
class KeypointName {
 public:
  explicit KeypointName(std::string name);

  static bool is_valid(std::string_view name);

  const std::string& str() const { return name_; }

  friend bool operator==(const KeypointName&, const KeypointName&) = default;
  friend std::strong_ordering operator<=>(const KeypointName&,
                                          const KeypointName&) = default;

 private:
  std::string name_;
};

/// One dataset's skeleton: an ordered, duplicate-free list of keypoints.
/// The order is the dataset's native annotation order, i.e. index k of an
/// annotation array refers to keypoints[k].
struct SkeletonSchema {
  std::string id;
  std::vector<KeypointName> keypoints;

  SkeletonSchema(std::string schema_id, std::vector<KeypointName> names);

  std::size_t size() const { return keypoints.size(); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  bool contains(std::string_view name) const;
};

/// The superset skeleton: every keypoint of every source exactly once, with
/// per-keypoint provenance (which source schemas define it).
struct UnionSchema {
  std::vector<KeypointName> keypoints;
  /// Parallel to keypoints; sorted, duplicate-free source schema ids.
  std::vector<std::vector<std::string>> provenance;

  std::size_t size() const { return keypoints.size(); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  std::vector<std::string> names() const;
};

/// Index map from a source skeleton into a union: entry k is the union slot
/// of source keypoint k. Injective, and round-trips:
/// union.keypoints[index_map[k]] == source.keypoints[k].
struct SchemaMapping {
  std::string source_id;
  std::vector<std::size_t> index_map;
};

/// Like SchemaMapping but tolerates source keypoints absent from the union;
/// those entries are empty and listed in `dropped`.
struct PartialMapping {
  std::string source_id;
  std::vector<std::optional<std::size_t>> index_map;
  std::vector<KeypointName> dropped;
};

/// Union of all source skeletons. Ordering rule: the first schema's
/// keypoints in native order, then each subsequent schema's unseen
/// keypoints in native order.
UnionSchema build_union(std::span<const SkeletonSchema> schemas);
UnionSchema build_union(std::initializer_list<SkeletonSchema> schemas);

/// Keypoints present in both skeletons, in a's order.
std::vector<KeypointName> overlap(const SkeletonSchema& a,
                                  const SkeletonSchema& b);

/// Keypoints of a that are not in b, in a's order.
std::vector<KeypointName> unique_to(const SkeletonSchema& a,
                                    const SkeletonSchema& b);

/// Throws SchemaError naming the first source keypoint missing from the
/// union.
SchemaMapping mapping_into(const SkeletonSchema& source, const UnionSchema& u);

PartialMapping partial_mapping_into(const SkeletonSchema& source,
                                    const UnionSchema& u);

/// Named skeletons plus alias resolution. `builtin()` ships the standard
/// coco17 / mpii16 / halpe26 definitions; more can be added from schema
/// definition files: {"id": str, "keypoints": [str, ...], "aliases":
/// {alias: canonical}}.
class SchemaRegistry {
 public:
  static SchemaRegistry builtin();

  void add(SkeletonSchema schema);
  void add_alias(std::string alias, std::string canonical);

  /// Lowercases, replaces spaces and dashes with underscores, then applies
  /// the alias table.
  std::string canonical_name(std::string_view name) const;

  bool has(std::string_view id) const;
  const SkeletonSchema& get(std::string_view id) const;
  std::vector<std::string> ids() const;

  /// Loads a schema definition file, registering its aliases and schema.
  const SkeletonSchema& load_file(const std::filesystem::path& path);

  /// Returns the schema for a known id, otherwise treats the argument as a
  /// definition file path.
  const SkeletonSchema& resolve(const std::string& id_or_path);

 private:
  std::map<std::string, SkeletonSchema, std::less<>> schemas_;
  std::map<std::string, std::string, std::less<>> aliases_;
};

}  // namespace poseunion
