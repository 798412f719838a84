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

#include "miniops/tsstore/segment.hpp"

#include <algorithm>

#include "miniops/common/codec.hpp"
#include "miniops/common/error.hpp"
#include "miniops/tsstore/gorilla.hpp"

namespace miniops::tsstore {

namespace {

constexpr std::string_view kMagic = "MOPS1";

void put_string(std::string& out, const std::string& s) {
  put_varint(out, s.size());
  out.append(s);
}

std::string get_string(std::string_view in, std::size_t& pos) {
  const auto len = get_varint(in, pos);
  if (len > in.size() - pos) throw Error(Errc::corrupt, "segment string truncated");
  std::string s(in.substr(pos, len));
  pos += len;
  return s;
}

void put_u32le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32le(std::string_view in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

}  // namespace

Segment Segment::build(EpochMs start, EpochMs end, const std::vector<SeriesColumn>& columns) {
  Segment seg;
  seg.start_ = start;
  seg.end_ = end;
  std::string& out = seg.bytes_;
  out.append(kMagic);
  put_varint(out, zigzag(start));
  put_varint(out, zigzag(end));

  std::vector<const SeriesColumn*> sorted;
  for (const auto& c : columns) {
    if (!c.ts.empty()) sorted.push_back(&c);
  }
  std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) { return a->key < b->key; });

  for (const SeriesColumn* c : sorted) {
    SegmentIndexEntry e;
    e.key = c->key;
    e.count = c->ts.size();
    e.first_ts = c->ts.front();
    e.last_ts = c->ts.back();
    const std::string ts_col = encode_timestamps(c->ts);
    const std::string val_col = encode_values(c->values);
    e.ts_offset = out.size();
    e.ts_length = ts_col.size();
    out.append(ts_col);
    e.value_offset = out.size();
    e.value_length = val_col.size();
    out.append(val_col);
    seg.index_.push_back(std::move(e));
  }

  const auto footer_offset = static_cast<std::uint32_t>(out.size());
  put_varint(out, seg.index_.size());
  for (const auto& e : seg.index_) {
    put_string(out, e.key.name());
    put_varint(out, e.key.tags().size());
    for (const auto& [k, v] : e.key.tags()) {
      put_string(out, k);
      put_string(out, v);
    }
    put_varint(out, e.count);
    put_varint(out, zigzag(e.first_ts));
    put_varint(out, zigzag(e.last_ts));
    put_varint(out, e.ts_offset);
    put_varint(out, e.ts_length);
    put_varint(out, e.value_offset);
    put_varint(out, e.value_length);
  }
  put_u32le(out, footer_offset);
  put_u32le(out, crc32(out));
  return seg;
}

Segment Segment::parse(std::string bytes) {
  if (bytes.size() < kMagic.size() + 8 || std::string_view(bytes).substr(0, kMagic.size()) != kMagic) {
    throw Error(Errc::corrupt, "not a MOPS1 segment");
  }
  const std::size_t body = bytes.size() - 4;
  if (crc32(std::string_view(bytes).substr(0, body)) != get_u32le(bytes, body)) {
    throw Error(Errc::corrupt, "segment checksum mismatch");
  }
  Segment seg;
  std::string_view in(bytes);
  std::size_t pos = kMagic.size();
  seg.start_ = unzigzag(get_varint(in, pos));
  seg.end_ = unzigzag(get_varint(in, pos));

  pos = get_u32le(in, body - 4);
  if (pos >= body - 4) throw Error(Errc::corrupt, "bad footer offset");
  const std::string_view footer = in.substr(0, body - 4);
  const auto n = get_varint(footer, pos);
  for (std::uint64_t i = 0; i < n; ++i) {
    std::string name = get_string(footer, pos);
    TagMap tags;
    const auto ntags = get_varint(footer, pos);
    for (std::uint64_t t = 0; t < ntags; ++t) {
      std::string k = get_string(footer, pos);
      tags[k] = get_string(footer, pos);
    }
    SegmentIndexEntry e;
    e.key = SeriesKey(std::move(name), tags);
    e.count = get_varint(footer, pos);
    e.first_ts = unzigzag(get_varint(footer, pos));
    e.last_ts = unzigzag(get_varint(footer, pos));
    e.ts_offset = get_varint(footer, pos);
    e.ts_length = get_varint(footer, pos);
    e.value_offset = get_varint(footer, pos);
    e.value_length = get_varint(footer, pos);
    if (e.ts_offset + e.ts_length > body || e.value_offset + e.value_length > body) {
      throw Error(Errc::corrupt, "segment column out of bounds");
    }
    seg.index_.push_back(std::move(e));
  }
  seg.bytes_ = std::move(bytes);
  return seg;
}

const SegmentIndexEntry* Segment::find(const std::string& canonical) const {
  auto it = std::lower_bound(index_.begin(), index_.end(), canonical,
                             [](const SegmentIndexEntry& e, const std::string& k) { return e.key.canonical() < k; });
  return it != index_.end() && it->key.canonical() == canonical ? &*it : nullptr;
}

SeriesColumn Segment::read(const SegmentIndexEntry& e) const {
  const std::string_view all(bytes_);
  SeriesColumn c;
  c.key = e.key;
  c.ts = decode_timestamps(all.substr(e.ts_offset, e.ts_length), e.count);
  c.values = decode_values(all.substr(e.value_offset, e.value_length), e.count);
  return c;
}

std::uint64_t Segment::point_count() const {
  std::uint64_t n = 0;
  for (const auto& e : index_) n += e.count;
  return n;
}

}  // namespace miniops::tsstore
