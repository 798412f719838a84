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

#include "miniops/tsstore/gorilla.hpp"

#include <bit>
#include <cstring>

#include "miniops/common/error.hpp"

namespace miniops::tsstore {

void BitWriter::write_bit(bool bit) {
  if (used_in_last_ == 8) {
    bytes_.push_back('\0');
    used_in_last_ = 0;
  }
  if (bit) bytes_.back() = static_cast<char>(bytes_.back() | (0x80 >> used_in_last_));
  ++used_in_last_;
}

void BitWriter::write_bits(std::uint64_t value, int count) {
  for (int i = count - 1; i >= 0; --i) write_bit((value >> i) & 1u);
}

bool BitReader::read_bit() {
  const std::size_t byte = bit_pos_ >> 3;
  if (byte >= bytes_.size()) throw Error(Errc::corrupt, "value column truncated");
  const bool bit = (static_cast<unsigned char>(bytes_[byte]) >> (7 - (bit_pos_ & 7))) & 1u;
  ++bit_pos_;
  return bit;
}

std::uint64_t BitReader::read_bits(int count) {
  std::uint64_t v = 0;
  for (int i = 0; i < count; ++i) v = (v << 1) | static_cast<std::uint64_t>(read_bit());
  return v;
}

void put_varint(std::string& out, std::uint64_t v) {
  while (v >= 0x80) {
    out.push_back(static_cast<char>((v & 0x7f) | 0x80));
    v >>= 7;
  }
  out.push_back(static_cast<char>(v));
}

std::uint64_t get_varint(std::string_view in, std::size_t& pos) {
  std::uint64_t v = 0;
  for (int shift = 0; shift < 64; shift += 7) {
    if (pos >= in.size()) throw Error(Errc::corrupt, "varint truncated");
    const auto byte = static_cast<unsigned char>(in[pos++]);
    v |= static_cast<std::uint64_t>(byte & 0x7f) << shift;
    if (!(byte & 0x80)) return v;
  }
  throw Error(Errc::corrupt, "varint too long");
}

std::string encode_timestamps(std::span<const EpochMs> ts) {
  std::string out;
  if (ts.empty()) return out;
  put_varint(out, zigzag(ts[0]));
  if (ts.size() == 1) return out;
  std::int64_t prev_delta = ts[1] - ts[0];
  put_varint(out, zigzag(prev_delta));
  std::uint64_t zero_run = 0;
  for (std::size_t i = 2; i < ts.size(); ++i) {
    const std::int64_t delta = ts[i] - ts[i - 1];
    const std::int64_t dod = delta - prev_delta;
    prev_delta = delta;
    if (dod == 0) {
      ++zero_run;
      continue;
    }
    if (zero_run) {
      put_varint(out, (zero_run << 1) | 1u);
      zero_run = 0;
    }
    put_varint(out, zigzag(dod) << 1);
  }
  if (zero_run) put_varint(out, (zero_run << 1) | 1u);
  return out;
}

std::vector<EpochMs> decode_timestamps(std::string_view column, std::size_t count) {
  std::vector<EpochMs> ts;
  ts.reserve(count);
  if (count == 0) return ts;
  std::size_t pos = 0;
  ts.push_back(unzigzag(get_varint(column, pos)));
  if (count == 1) return ts;
  std::int64_t delta = unzigzag(get_varint(column, pos));
  ts.push_back(ts.back() + delta);
  while (ts.size() < count) {
    const std::uint64_t token = get_varint(column, pos);
    if (token & 1u) {
      const std::uint64_t run = token >> 1;
      if (run == 0 || run > count - ts.size()) throw Error(Errc::corrupt, "bad zero run in timestamp column");
      for (std::uint64_t i = 0; i < run; ++i) ts.push_back(ts.back() + delta);
    } else {
      delta += unzigzag(token >> 1);
      ts.push_back(ts.back() + delta);
    }
  }
  return ts;
}

namespace {

std::uint64_t bits_of(double v) { return std::bit_cast<std::uint64_t>(v); }

}  // namespace

std::string encode_values(std::span<const double> values) {
  BitWriter w;
  if (values.empty()) return {};
  std::uint64_t prev = bits_of(values[0]);
  w.write_bits(prev, 64);
  int prev_leading = -1;
  int prev_trailing = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    const std::uint64_t cur = bits_of(values[i]);
    const std::uint64_t x = cur ^ prev;
    prev = cur;
    if (x == 0) {
      w.write_bit(false);
      continue;
    }
    w.write_bit(true);
    int leading = std::countl_zero(x);
    const int trailing = std::countr_zero(x);
    if (leading > 31) leading = 31;
    if (prev_leading >= 0 && leading >= prev_leading && trailing >= prev_trailing) {
      w.write_bit(false);
      const int meaningful = 64 - prev_leading - prev_trailing;
      w.write_bits(x >> prev_trailing, meaningful);
    } else {
      w.write_bit(true);
      const int meaningful = 64 - leading - trailing;
      w.write_bits(static_cast<std::uint64_t>(leading), 5);
      w.write_bits(static_cast<std::uint64_t>(meaningful & 63), 6);  // 64 is stored as 0
      w.write_bits(x >> trailing, meaningful);
      prev_leading = leading;
      prev_trailing = trailing;
    }
  }
  return w.take();
}

std::vector<double> decode_values(std::string_view column, std::size_t count) {
  std::vector<double> out;
  out.reserve(count);
  if (count == 0) return out;
  BitReader r(column);
  std::uint64_t prev = r.read_bits(64);
  out.push_back(std::bit_cast<double>(prev));
  int leading = 0;
  int trailing = 0;
  while (out.size() < count) {
    if (r.read_bit()) {
      if (r.read_bit()) {
        leading = static_cast<int>(r.read_bits(5));
        int meaningful = static_cast<int>(r.read_bits(6));
        if (meaningful == 0) meaningful = 64;
        trailing = 64 - leading - meaningful;
        if (trailing < 0) throw Error(Errc::corrupt, "bad XOR window");
      }
      const int meaningful = 64 - leading - trailing;
      prev ^= r.read_bits(meaningful) << trailing;
    }
    out.push_back(std::bit_cast<double>(prev));
  }
  return out;
}

}  // namespace miniops::tsstore
