// Copyright 2026 The Entret Authors.
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

#include "entret/common.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <boost/crc.hpp>

namespace entret {

uint64_t Fnv1a64(std::string_view bytes) {
  uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

uint32_t Crc32c(std::span<const uint8_t> bytes) {
  boost::crc_optimal<32, 0x1EDC6F41, 0xFFFFFFFF, 0xFFFFFFFF, true, true> crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

uint64_t Rng::Below(uint64_t n) {
  // Rejection sampling keeps the result unbiased.
  uint64_t limit = ~0ULL - (~0ULL % n);
  uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::Normal() {
  double u1 = Uniform();
  double u2 = Uniform();
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

void ByteWriter::PutU32(uint32_t v) {
  for (int i = 0; i < 4; ++i) data_.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void ByteWriter::PutU64(uint64_t v) {
  for (int i = 0; i < 8; ++i) data_.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void ByteWriter::PutF32(float v) { PutU32(std::bit_cast<uint32_t>(v)); }

void ByteWriter::PutBytes(std::string_view bytes) {
  data_.insert(data_.end(), bytes.begin(), bytes.end());
}

void ByteWriter::PutString(std::string_view s) {
  PutU32(static_cast<uint32_t>(s.size()));
  PutBytes(s);
}

void ByteWriter::PutF32s(std::span<const float> values) {
  data_.reserve(data_.size() + 4 * values.size());
  for (float v : values) PutF32(v);
}

void ByteWriter::PutU16s(std::span<const uint16_t> values) {
  for (uint16_t v : values) {
    data_.push_back(static_cast<uint8_t>(v));
    data_.push_back(static_cast<uint8_t>(v >> 8));
  }
}

void ByteWriter::PutU8s(std::span<const uint8_t> values) {
  data_.insert(data_.end(), values.begin(), values.end());
}

void ByteWriter::PutChecksum() { PutU32(Crc32c(data_)); }

void ByteReader::Require(size_t n) {
  if (remaining() < n) {
    DataError(what_ + ": truncated file (need " + std::to_string(n) +
              " bytes at offset " + std::to_string(pos_) + ", have " +
              std::to_string(remaining()) + ")");
  }
}

uint32_t ByteReader::GetU32() {
  Require(4);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(data_[pos_ + i]) << (8 * i);
  pos_ += 4;
  return v;
}

uint64_t ByteReader::GetU64() {
  Require(8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(data_[pos_ + i]) << (8 * i);
  pos_ += 8;
  return v;
}

float ByteReader::GetF32() { return std::bit_cast<float>(GetU32()); }

std::string ByteReader::GetBytes(size_t n) {
  Require(n);
  std::string s(reinterpret_cast<const char *>(data_.data() + pos_), n);
  pos_ += n;
  return s;
}

std::string ByteReader::GetString() { return GetBytes(GetU32()); }

void ByteReader::GetF32s(std::span<float> out) {
  Require(4 * out.size());
  for (float &v : out) v = GetF32();
}

void ByteReader::GetU16s(std::span<uint16_t> out) {
  Require(2 * out.size());
  for (uint16_t &v : out) {
    v = static_cast<uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
    pos_ += 2;
  }
}

void ByteReader::GetU8s(std::span<uint8_t> out) {
  Require(out.size());
  std::memcpy(out.data(), data_.data() + pos_, out.size());
  pos_ += out.size();
}

void ByteReader::VerifyChecksum() {
  size_t body = pos_;
  uint32_t stored = GetU32();
  uint32_t actual = Crc32c(data_.subspan(0, body));
  if (stored != actual) DataError(what_ + ": checksum mismatch");
  if (remaining() != 0) DataError(what_ + ": trailing bytes after checksum");
}

std::vector<uint8_t> ReadFileBytes(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) DataError("cannot open " + path);
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in),
                              std::istreambuf_iterator<char>());
}

void WriteFileBytes(const std::string &path, std::span<const uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) DataError("cannot write " + path);
  out.write(reinterpret_cast<const char *>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) DataError("write failed: " + path);
}

void WriteTextFile(const std::string &path, std::string_view text) {
  WriteFileBytes(path, std::span<const uint8_t>(
                           reinterpret_cast<const uint8_t *>(text.data()), text.size()));
}

}  // namespace entret
