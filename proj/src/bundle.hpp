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

#ifndef NIB_SRC_BUNDLE_HPP_
#define NIB_SRC_BUNDLE_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace nib {

// On-disk layout, all integers little-endian:
//
//   "NIBT"  u32 version (= 1)  u32 entry_count
//   per entry:
//     u32 name_length, UTF-8 name bytes
//     u8 dtype (0 = float32), u8 rank, u32 dims[rank]
//     float32 payload[product(dims)], row-major
//
// Nothing may follow the last entry.
inline constexpr char kBundleMagic[4] = {'N', 'I', 'B', 'T'};
inline constexpr std::uint32_t kBundleVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 0;

struct BundleEntry {
  std::string name;
  Shape shape;
  std::vector<float> data;

  friend bool operator==(const BundleEntry&, const BundleEntry&) = default;
};

// Throws kDuplicateName / kDimension for invalid entries.
std::vector<std::uint8_t> WriteBundle(std::span<const BundleEntry> entries);
// Throws kBadMagic, kVersionMismatch, kUnsupportedDtype, kDuplicateName,
// kTruncated or kTrailingBytes.
std::vector<BundleEntry> ReadBundle(std::span<const std::uint8_t> bytes);

BundleEntry ToEntry(const std::string& name, const Tensor& tensor);
// float32 -> float64 widening.
Tensor ToTensor(const BundleEntry& entry);

std::vector<std::uint8_t> ReadFileBytes(const std::filesystem::path& path);
void WriteFileBytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void WriteTextFile(const std::filesystem::path& path, const std::string& text);
std::string ReadTextFile(const std::filesystem::path& path);

}  // namespace nib

#endif  // NIB_SRC_BUNDLE_HPP_
