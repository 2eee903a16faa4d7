/*
 * Copyright 2026 The NIB Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef NIB_SRC_ERROR_HPP_
#define NIB_SRC_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace nib {

// Machine-readable error kinds. The numeric values are part of the C API
// (see include/nib/nib.h) and must stay in sync with nib_status.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kDimension = 2,
  kNonFinite = 3,
  kDegenerateInput = 4,
  kConfig = 5,
  kIo = 6,
  kBadMagic = 7,
  kVersionMismatch = 8,
  kDuplicateName = 9,
  kTruncated = 10,
  kTrailingBytes = 11,
  kUnsupportedDtype = 12,
  kMissingWeight = 13,
  kShapeMismatch = 14,
  kUnknownMethod = 15,
  kOptimization = 16,
  kEmptyInput = 17,
  kAllExcluded = 18,
  kVerificationFailed = 19,
  kManifest = 20,
};

const char* ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void Check(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) Fail(code, message);
}

}  // namespace nib

#endif  // NIB_SRC_ERROR_HPP_
