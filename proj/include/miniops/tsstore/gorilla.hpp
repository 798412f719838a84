/*
    Copyright (c) 2026 The miniops Authors
    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at
        http://www.apache.org/licenses/LICENSE-2.0
    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "miniops/common/clock.hpp"

namespace miniops::tsstore {

class BitWriter {
 public:
  void write_bit(bool bit);
  void write_bits(std::uint64_t value, int count);  // low `count` bits, MSB first
  const std::string& bytes() const { return bytes_; }
  std::string take() { return std::move(bytes_); }

 private:
  std::string bytes_;
  int used_in_last_ = 8;
};

class BitReader {
 public:
  explicit BitReader(std::string_view bytes) : bytes_(bytes) {}
  bool read_bit();
  std::uint64_t read_bits(int count);

 private:
  std::string_view bytes_;
  std::size_t bit_pos_ = 0;
};

void put_varint(std::string& out, std::uint64_t v);
std::uint64_t get_varint(std::string_view in, std::size_t& pos);  // throws Error(corrupt)
inline std::uint64_t zigzag(std::int64_t v) {
  return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
}
inline std::int64_t unzigzag(std::uint64_t v) {
  return static_cast<std::int64_t>(v >> 1) ^ -static_cast<std::int64_t>(v & 1);
}

// Timestamp column: zigzag varints of the first timestamp and first delta, then one
// token per delta-of-delta: non-zero values as zigzag(dod) << 1, runs of zeros as
// (run << 1) | 1. A steady cadence collapses to a single run token.
std::string encode_timestamps(std::span<const EpochMs> ts);
std::vector<EpochMs> decode_timestamps(std::string_view column, std::size_t count);

// Value column: XOR of consecutive IEEE-754 bit patterns with leading/trailing-zero
// windows (first value stored raw).
std::string encode_values(std::span<const double> values);
std::vector<double> decode_values(std::string_view column, std::size_t count);

}  // namespace miniops::tsstore
