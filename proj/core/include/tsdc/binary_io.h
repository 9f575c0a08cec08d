// Copyright 2026 The tsdc Authors
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

#ifndef TSDC_BINARY_IO_H_
#define TSDC_BINARY_IO_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace tsdc {

std::uint32_t Crc32(std::span<const std::uint8_t> bytes);

std::string ReadFileBytes(const std::string& path);
void WriteFileBytes(const std::string& path, std::string_view bytes);

// Little-endian serializer.
class BinaryWriter {
 public:
  void Bytes(const void* data, std::size_t size);
  void U8(std::uint8_t v);
  void U32(std::uint32_t v);
  void U64(std::uint64_t v);
  void I32(std::int32_t v) { U32(static_cast<std::uint32_t>(v)); }
  void F32(std::span<const float> values);
  // Appends the CRC32 of everything written so far.
  void AppendCrc();
  const std::string& buffer() const { return buffer_; }

 private:
  std::string buffer_;
};

// Little-endian reader over an in-memory file image. Reads past the end throw
// FormatError mentioning `what`.
class BinaryReader {
 public:
  BinaryReader(std::string_view data, std::string what);
  void Bytes(void* out, std::size_t size);
  std::uint8_t U8();
  std::uint32_t U32();
  std::uint64_t U64();
  std::int32_t I32() { return static_cast<std::int32_t>(U32()); }
  void F32(std::span<float> out);
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
  std::string what_;
};

// Checks the trailing CRC32 and returns the bytes it covers. Throws
// ChecksumError on mismatch and FormatError when the image is too short.
std::string_view VerifyCrc(std::string_view image, const std::string& what);

}  // namespace tsdc

#endif  // TSDC_BINARY_IO_H_
