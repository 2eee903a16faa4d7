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

#ifndef NIB_SRC_TENSOR_HPP_
#define NIB_SRC_TENSOR_HPP_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace nib {

using Shape = std::vector<std::size_t>;

std::size_t NumElements(const Shape& shape);
std::string ShapeString(const Shape& shape);

// Dense row-major float64 array. Values are validated finite on construction
// and the object is immutable afterwards, so it can be shared read-only
// between threads.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data);

  static Tensor Zeros(Shape shape);
  static Tensor Full(Shape shape, double value);
  static Tensor Scalar(double value);
  static Tensor Vector(std::vector<double> values);
  // Builds a rows x cols matrix from nested lists; used mostly in tests.
  static Tensor Matrix(std::initializer_list<std::initializer_list<double>> rows);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // 2-D accessors. Rank-1 tensors behave as a single row.
  std::size_t rows() const;
  std::size_t cols() const;
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  double operator[](std::size_t i) const { return data_[i]; }
  std::span<const double> values() const { return data_; }
  const std::vector<double>& data() const { return data_; }

  // Scalar value of a one-element tensor.
  double item() const;

  Tensor Reshaped(Shape shape) const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Largest absolute elementwise difference; shapes must match.
double MaxAbsDiff(const Tensor& a, const Tensor& b);

}  // namespace nib

#endif  // NIB_SRC_TENSOR_HPP_
