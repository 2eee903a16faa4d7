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

#include "tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "error.hpp"

namespace nib {

std::size_t NumElements(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string ShapeString(const Shape& shape) {
  std::ostringstream out;
  out << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << "x";
    out << shape[i];
  }
  out << "]";
  return out.str();
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  Check(NumElements(shape_) == data_.size(), ErrorCode::kDimension,
        "tensor shape " + ShapeString(shape_) + " does not match " +
            std::to_string(data_.size()) + " values");
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      Fail(ErrorCode::kNonFinite,
           "non-finite tensor value at flat index " + std::to_string(i));
    }
  }
}

Tensor Tensor::Zeros(Shape shape) { return Full(std::move(shape), 0.0); }

Tensor Tensor::Full(Shape shape, double value) {
  const std::size_t n = NumElements(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::Scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::Vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  std::vector<double> data;
  std::size_t cols = rows.size() ? rows.begin()->size() : 0;
  for (const auto& row : rows) {
    Check(row.size() == cols, ErrorCode::kDimension, "ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({rows.size(), cols}, std::move(data));
}

std::size_t Tensor::dim(std::size_t axis) const {
  Check(axis < shape_.size(), ErrorCode::kDimension,
        "axis " + std::to_string(axis) + " out of range for " + ShapeString(shape_));
  return shape_[axis];
}

std::size_t Tensor::rows() const {
  if (shape_.size() <= 1) return 1;
  Check(shape_.size() == 2, ErrorCode::kDimension,
        "expected a matrix, got " + ShapeString(shape_));
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.empty()) return 1;
  if (shape_.size() == 1) return shape_[0];
  Check(shape_.size() == 2, ErrorCode::kDimension,
        "expected a matrix, got " + ShapeString(shape_));
  return shape_[1];
}

double Tensor::item() const {
  Check(data_.size() == 1, ErrorCode::kDimension,
        "item() on tensor of shape " + ShapeString(shape_));
  return data_[0];
}

Tensor Tensor::Reshaped(Shape shape) const {
  Check(NumElements(shape) == data_.size(), ErrorCode::kDimension,
        "cannot reshape " + ShapeString(shape_) + " to " + ShapeString(shape));
  return Tensor(std::move(shape), data_);
}

double MaxAbsDiff(const Tensor& a, const Tensor& b) {
  Check(a.shape() == b.shape(), ErrorCode::kDimension,
        "shape mismatch " + ShapeString(a.shape()) + " vs " + ShapeString(b.shape()));
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return worst;
}

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kDimension: return "dimension";
    case ErrorCode::kNonFinite: return "non_finite";
    case ErrorCode::kDegenerateInput: return "degenerate_input";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kBadMagic: return "bad_magic";
    case ErrorCode::kVersionMismatch: return "version_mismatch";
    case ErrorCode::kDuplicateName: return "duplicate_name";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kTrailingBytes: return "trailing_bytes";
    case ErrorCode::kUnsupportedDtype: return "unsupported_dtype";
    case ErrorCode::kMissingWeight: return "missing_weight";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kUnknownMethod: return "unknown_method";
    case ErrorCode::kOptimization: return "optimization";
    case ErrorCode::kEmptyInput: return "empty_input";
    case ErrorCode::kAllExcluded: return "all_excluded";
    case ErrorCode::kVerificationFailed: return "verification_failed";
    case ErrorCode::kManifest: return "manifest";
  }
  return "unknown";
}

}  // namespace nib
