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

#include "bundle.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "error.hpp"

namespace nib {

namespace {

void PutU32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::span<const std::uint8_t> Take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      Fail(ErrorCode::kTruncated, std::string("bundle truncated while reading ") + what);
    }
    auto view = bytes_.subspan(pos_, n);
    pos_ += n;
    return view;
  }
  std::uint8_t U8(const char* what) { return Take(1, what)[0]; }
  std::uint32_t U32(const char* what) {
    auto b = Take(4, what);
    return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
           static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> WriteBundle(std::span<const BundleEntry> entries) {
  std::vector<std::uint8_t> out(std::begin(kBundleMagic), std::end(kBundleMagic));
  PutU32(out, kBundleVersion);
  PutU32(out, static_cast<std::uint32_t>(entries.size()));
  std::set<std::string> seen;
  for (const BundleEntry& e : entries) {
    Check(seen.insert(e.name).second, ErrorCode::kDuplicateName,
          "duplicate bundle entry '" + e.name + "'");
    Check(e.shape.size() <= 255, ErrorCode::kDimension, "rank above 255 for '" + e.name + "'");
    Check(NumElements(e.shape) == e.data.size(), ErrorCode::kDimension,
          "payload of '" + e.name + "' does not match shape " + ShapeString(e.shape));
    PutU32(out, static_cast<std::uint32_t>(e.name.size()));
    out.insert(out.end(), e.name.begin(), e.name.end());
    out.push_back(kDtypeFloat32);
    out.push_back(static_cast<std::uint8_t>(e.shape.size()));
    for (std::size_t d : e.shape) PutU32(out, static_cast<std::uint32_t>(d));
    for (float f : e.data) PutU32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

std::vector<BundleEntry> ReadBundle(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  auto magic = in.Take(4, "magic");
  Check(std::memcmp(magic.data(), kBundleMagic, 4) == 0, ErrorCode::kBadMagic,
        "not a tensor bundle (bad magic)");
  const std::uint32_t version = in.U32("version");
  Check(version == kBundleVersion, ErrorCode::kVersionMismatch,
        "unsupported bundle version " + std::to_string(version));
  const std::uint32_t count = in.U32("entry count");
  std::vector<BundleEntry> entries;
  std::set<std::string> seen;
  for (std::uint32_t k = 0; k < count; ++k) {
    BundleEntry e;
    const std::uint32_t name_len = in.U32("name length");
    auto name = in.Take(name_len, "entry name");
    e.name.assign(name.begin(), name.end());
    Check(seen.insert(e.name).second, ErrorCode::kDuplicateName,
          "duplicate bundle entry '" + e.name + "'");
    const std::uint8_t dtype = in.U8("dtype");
    Check(dtype == kDtypeFloat32, ErrorCode::kUnsupportedDtype,
          "entry '" + e.name + "' has unsupported dtype " + std::to_string(dtype));
    const std::uint8_t rank = in.U8("rank");
    std::size_t n = 1;
    for (std::uint8_t r = 0; r < rank; ++r) {
      e.shape.push_back(in.U32("dims"));
      n *= e.shape.back();
    }
    Check(n <= in.remaining() / 4, ErrorCode::kTruncated,
          "bundle truncated in payload of '" + e.name + "'");
    e.data.resize(n);
    for (float& f : e.data) f = std::bit_cast<float>(in.U32("payload"));
    entries.push_back(std::move(e));
  }
  Check(in.remaining() == 0, ErrorCode::kTrailingBytes,
        std::to_string(in.remaining()) + " trailing bytes after the last entry");
  return entries;
}

BundleEntry ToEntry(const std::string& name, const Tensor& tensor) {
  BundleEntry e{name, tensor.shape(), {}};
  e.data.reserve(tensor.size());
  for (double v : tensor.values()) e.data.push_back(static_cast<float>(v));
  return e;
}

Tensor ToTensor(const BundleEntry& entry) {
  return Tensor(entry.shape, std::vector<double>(entry.data.begin(), entry.data.end()));
}

std::vector<std::uint8_t> ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  Check(static_cast<bool>(in), ErrorCode::kIo, "cannot open '" + path.string() + "'");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void WriteFileBytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Check(static_cast<bool>(out), ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  Check(static_cast<bool>(out), ErrorCode::kIo, "short write to '" + path.string() + "'");
}

void WriteTextFile(const std::filesystem::path& path, const std::string& text) {
  WriteFileBytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string ReadTextFile(const std::filesystem::path& path) {
  const auto bytes = ReadFileBytes(path);
  return std::string(bytes.begin(), bytes.end());
}

}  // namespace nib
