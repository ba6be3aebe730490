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

// Object-level JSON converters shared between translation units; not part
// of the installed API.

#pragma once

#include <json.hpp>

#include "poseunion/metrics.hpp"

namespace poseunion::detail {

nlohmann::json eval_report_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& doc);

}  // namespace poseunion::detail
