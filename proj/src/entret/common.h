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

#ifndef ENTRET_COMMON_H_
#define ENTRET_COMMON_H_

#include <charconv>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace entret {

// Error taxonomy shared by the library, the C API and the CLI exit codes.
enum class ErrorKind {
  kUsage = 1,    // bad arguments or configuration
  kData = 2,     // malformed, missing or inconsistent input data
  kNumeric = 3,  // non-finite values, failed numeric checks
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void UsageError(const std::string &message) {
  throw Error(ErrorKind::kUsage, message);
}
[[noreturn]] inline void DataError(const std::string &message) {
  throw Error(ErrorKind::kData, message);
}
[[noreturn]] inline void NumericError(const std::string &message) {
  throw Error(ErrorKind::kNumeric, message);
}

// Parses a whole config value; throws a usage error naming the key.
template <typename T>
inline T ParseNumber(const std::string &key, const std::string &value) {
  T out{};
  if constexpr (std::is_floating_point_v<T>) {
    try {
      size_t used = 0;
      out = static_cast<T>(std::stod(value, &used));
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception &) {
      UsageError("invalid number for '" + key + "': " + value);
    }
  } else {
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
      UsageError("invalid integer for '" + key + "': " + value);
    }
  }
  return out;
}

// 64-bit FNV-1a over raw bytes.
uint64_t Fnv1a64(std::string_view bytes);

// CRC-32C (Castagnoli).
uint32_t Crc32c(std::span<const uint8_t> bytes);

// Seeded generator with platform-independent derived distributions. The
// standard library distributions are implementation-defined, so everything
// that has to be reproducible goes through these helpers.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t Next() { return engine_(); }

  // Uniform in [0, 1).
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform integer in [0, n). n must be positive.
  uint64_t Below(uint64_t n);

  // Standard normal via Box-Muller.
  double Normal();

  template <typename T>
  void Shuffle(std::vector<T> &items) {
    for (size_t i = items.size(); i > 1; --i) {
      size_t j = Below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  // Derives an independent stream for a named sub-component.
  Rng Fork(uint64_t salt) { return Rng(engine_() ^ (salt * 0x9e3779b97f4a7c15ULL)); }

 private:
  std::mt19937_64 engine_;
};

// Little-endian binary serialization into an in-memory buffer.
class ByteWriter {
 public:
  void PutU32(uint32_t v);
  void PutU64(uint64_t v);
  void PutF32(float v);
  void PutBytes(std::string_view bytes);
  void PutString(std::string_view s);  // u32 length prefix
  void PutF32s(std::span<const float> values);
  void PutU16s(std::span<const uint16_t> values);
  void PutU8s(std::span<const uint8_t> values);

  const std::vector<uint8_t> &data() const { return data_; }
  // Appends the CRC-32C of everything written so far.
  void PutChecksum();

 private:
  std::vector<uint8_t> data_;
};

class ByteReader {
 public:
  // 'what' names the artifact in error messages.
  ByteReader(std::span<const uint8_t> data, std::string what)
      : data_(data), what_(std::move(what)) {}

  uint32_t GetU32();
  uint64_t GetU64();
  float GetF32();
  std::string GetBytes(size_t n);
  std::string GetString();
  void GetF32s(std::span<float> out);
  void GetU16s(std::span<uint16_t> out);
  void GetU8s(std::span<uint8_t> out);

  size_t position() const { return pos_; }
  size_t remaining() const { return data_.size() - pos_; }
  void Require(size_t n);

  // Reads a trailing CRC-32C and checks it against the preceding bytes.
  void VerifyChecksum();

 private:
  std::span<const uint8_t> data_;
  size_t pos_ = 0;
  std::string what_;
};

std::vector<uint8_t> ReadFileBytes(const std::string &path);
void WriteFileBytes(const std::string &path, std::span<const uint8_t> bytes);
void WriteTextFile(const std::string &path, std::string_view text);

}  // namespace entret

#endif  // ENTRET_COMMON_H_
