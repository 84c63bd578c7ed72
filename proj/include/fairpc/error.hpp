// Copyright 2026 The fairpc Authors
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

#ifndef FAIRPC_ERROR_HPP_
#define FAIRPC_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace fairpc {

/// Error categories. The numeric values are mirrored by the C API status
/// codes in fairpc.h and must stay in sync.
enum class ErrorCode : int {
  kUsage = 1,
  kParse = 2,
  kSchema = 3,
  kStructure = 4,
  kUnsupported = 5,
  kNullEvidence = 6,
  kRowImpossible = 7,
  kIncompleteAssignment = 8,
  kVocabulary = 9,
  kBinning = 10,
  kFold = 11,
  kInsufficientData = 12,
  kGroup = 13,
  kIo = 14,
  kInternal = 15,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace fairpc

#endif  // FAIRPC_ERROR_HPP_
