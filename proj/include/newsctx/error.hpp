// Copyright 2026 The newsctx Authors.
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

#ifndef NEWSCTX_ERROR_HPP_
#define NEWSCTX_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace newsctx {

// Bad arguments or configuration supplied by the caller.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input data violates a schema or invariant. Messages name the offending
// line, field or id.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The model sidecar could not be reached or answered out of protocol.
class SidecarError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace newsctx

#endif  // NEWSCTX_ERROR_HPP_
