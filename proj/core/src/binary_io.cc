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

#include "tsdc/binary_io.h"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "tsdc/error.h"

namespace tsdc {

std::uint32_t Crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes 32-bit lengths; feed large buffers in chunks.
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t n = std::min<std::size_t>(bytes.size() - pos, 1u << 30);
    crc = crc32(crc, bytes.data() + pos, static_cast<uInt>(n));
    pos += n;
  }
  return static_cast<std::uint32_t>(crc);
}

std::string ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void WriteFileBytes(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing '" + path + "'");
}

void BinaryWriter::Bytes(const void* data, std::size_t size) {
  buffer_.append(static_cast<const char*>(data), size);
}

void BinaryWriter::U8(std::uint8_t v) { buffer_.push_back(static_cast<char>(v)); }

void BinaryWriter::U32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buffer_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void BinaryWriter::U64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buffer_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void BinaryWriter::F32(std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    Bytes(values.data(), values.size_bytes());
  } else {
    for (float f : values) U32(std::bit_cast<std::uint32_t>(f));
  }
}

void BinaryWriter::AppendCrc() {
  U32(Crc32(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(buffer_.data()), buffer_.size())));
}

BinaryReader::BinaryReader(std::string_view data, std::string what)
    : data_(data), what_(std::move(what)) {}

void BinaryReader::Bytes(void* out, std::size_t size) {
  if (remaining() < size) {
    throw FormatError(what_ + ": truncated (needed " + std::to_string(size) + " bytes at offset " +
                      std::to_string(pos_) + ", " + std::to_string(remaining()) + " left)");
  }
  std::memcpy(out, data_.data() + pos_, size);
  pos_ += size;
}

std::uint8_t BinaryReader::U8() {
  std::uint8_t v;
  Bytes(&v, 1);
  return v;
}

std::uint32_t BinaryReader::U32() {
  std::uint8_t b[4];
  Bytes(b, 4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint64_t BinaryReader::U64() {
  std::uint8_t b[8];
  Bytes(b, 8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

void BinaryReader::F32(std::span<float> out) {
  if constexpr (std::endian::native == std::endian::little) {
    Bytes(out.data(), out.size_bytes());
  } else {
    for (float& f : out) f = std::bit_cast<float>(U32());
  }
}

std::string_view VerifyCrc(std::string_view image, const std::string& what) {
  if (image.size() < 4) {
    throw FormatError(what + ": truncated (" + std::to_string(image.size()) + " bytes)");
  }
  std::string_view body = image.substr(0, image.size() - 4);
  BinaryReader tail(image.substr(image.size() - 4), what);
  const std::uint32_t stored = tail.U32();
  const std::uint32_t actual = Crc32(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(body.data()), body.size()));
  if (stored != actual) {
    std::ostringstream msg;
    msg << what << ": checksum mismatch (stored 0x" << std::hex << stored << ", computed 0x"
        << actual << "); file is corrupted or truncated";
    throw ChecksumError(msg.str());
  }
  return body;
}

}  // namespace tsdc
