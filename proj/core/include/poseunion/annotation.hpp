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

#include "poseunion/geometry.hpp"
#include "poseunion/schema.hpp"

namespace poseunion {

struct Bbox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double diag() const;

  friend bool operator==(const Bbox&, const Bbox&) = default;
};

/// One keypoint annotation triplet. v follows the COCO convention:
/// 0 = not labeled, 1 = labeled but occluded, 2 = labeled and visible.
struct KeypointTriplet {
  double x = 0.0;
  double y = 0.0;
  int v = 0;

  friend bool operator==(const KeypointTriplet&,
                         const KeypointTriplet&) = default;
};

/// One person instance as annotated in its source dataset, keypoints in the
/// source schema's native order.
struct RawInstance {
  std::int64_t image_id = 0;
  std::int64_t annotation_id = 0;
  Bbox bbox;
  double area = 0.0;
  std::vector<KeypointTriplet> triplets;
  std::string source_id;

  friend bool operator==(const RawInstance&, const RawInstance&) = default;
};

/// One person instance remapped into the union skeleton. Slots whose source
/// dataset does not annotate them carry the (0,0) sentinel with mask false;
/// consumers must branch on the mask, never on the sentinel value.
struct UnifiedInstance {
  std::int64_t image_id = 0;
  Bbox bbox;
  double area = 0.0;
  std::vector<Point2> coords;
  std::vector<bool> mask;
  std::vector<int> vis;
  /// Prediction confidence; 1.0 for ground truth. Serialized only when it
  /// differs from 1.0 so ground-truth files stay in the plain format.
  double score = 1.0;

  std::size_t labeled_count() const;

  friend bool operator==(const UnifiedInstance&,
                         const UnifiedInstance&) = default;
};

/// All-sentinel instance with `size` slots.
UnifiedInstance make_unified(std::size_t size);

struct DatasetDescriptor {
  std::string id;
  SkeletonSchema schema;
  /// Instances returned by the parse (annotations usable for training/eval).
  std::size_t instance_count = 0;
  /// Annotations skipped for num_keypoints = 0 / iscrowd.
  std::size_t skipped_count = 0;
  std::size_t crowd_count = 0;
  /// Category keypoint names disagreeing with the schema, when the file
  /// carries a categories block.
  std::size_t name_mismatches = 0;
  std::string file_digest;
};

struct ParsedAnnotations {
  DatasetDescriptor descriptor;
  std::vector<RawInstance> instances;
};

/// Parses a COCO-dialect annotation file (top-level images / annotations /
/// categories) against the given schema. Every annotation with
/// num_keypoints >= 1 and iscrowd absent or 0 becomes a RawInstance.
ParsedAnnotations parse_keypoint_json(std::string_view bytes,
                                      const SkeletonSchema& schema);

/// Inverse of parse_keypoint_json for the fields this library carries;
/// parse(write(x)) reproduces every RawInstance field-by-field.
std::string write_keypoint_json(const std::vector<RawInstance>& instances,
                                const SkeletonSchema& schema);

/// Places raw triplets into union slots. Mask becomes true exactly on
/// mapped slots with v > 0; coordinates are copied bit-exactly, unmapped
/// slots keep the sentinel.
UnifiedInstance remap_to_union(const RawInstance& raw,
                               const SchemaMapping& mapping,
                               std::size_t union_size);

/// Like above but source keypoints absent from the union (empty map
/// entries) are dropped.
UnifiedInstance remap_to_union(const RawInstance& raw,
                               const PartialMapping& mapping,
                               std::size_t union_size);

struct ThoraxResult {
  UnifiedInstance instance;
  bool synthesized = false;
};

/// Fills the thorax slot with the shoulder midpoint when the thorax is
/// unlabeled and both shoulders are labeled; otherwise returns the input
/// unchanged with synthesized = false. Visibility is the min of the two
/// shoulder flags.
ThoraxResult synthesize_thorax(const UnifiedInstance& inst,
                               const UnionSchema& u);

/// Rescales labeled coordinates into bbox units for loss computation:
/// coords' = ((x - bx)/bw, (y - by)/bh), bbox becomes the unit square and
/// area 1. Sentinel slots stay (0,0).
UnifiedInstance bbox_normalized(const UnifiedInstance& inst);

/// Serializes to the unified JSON format:
/// { "schema": [names], "instances": [ { image_id, bbox, area, coords,
/// mask, vis } ] }.
std::string write_unified(const std::vector<UnifiedInstance>& instances,
                          const UnionSchema& u);

struct UnifiedFile {
  std::vector<std::string> schema;
  std::vector<UnifiedInstance> instances;
};

UnifiedFile parse_unified(std::string_view bytes);

}  // namespace poseunion
