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

namespace poseunion {

/// Full command-line dispatcher behind the poseunion binary.
/// Exit codes: 0 success, 1 usage error, 2 input or format error,
/// 3 validation failure (for example a gradcheck exceeding tolerance).
int run_cli(int argc, char** argv);

}  // namespace poseunion
