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

#include <stdexcept>
#include <string>

namespace poseunion {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid skeleton definitions or set-algebra preconditions.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data (annotation files, unified files, checkpoints).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent or incomplete configuration (weights, teacher ids, grids).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A caller or internal invariant was violated (size mismatches,
/// non-finite values where finiteness is required).
class ContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace poseunion
