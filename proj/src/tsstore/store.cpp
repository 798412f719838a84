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

#include "miniops/tsstore/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>
#include <unordered_map>

#include "miniops/common/error.hpp"
#include "miniops/common/fsutil.hpp"
#include "miniops/common/json.hpp"

namespace miniops::tsstore {

namespace fs = std::filesystem;

namespace {

std::string segment_file_name(EpochMs start) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%020lld.mops", static_cast<long long>(start));
  return buf;
}

EpochMs floor_div(EpochMs a, EpochMs b) {
  EpochMs q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

using PointMap = std::map<EpochMs, double>;

// Sealed points overlaid with buffered ones (buffer wins), restricted to [from, to).
void merge_series(const Segment* sealed, const std::string& canonical, const PointMap* buffer, EpochMs from,
                  EpochMs to, std::vector<std::pair<EpochMs, double>>& out) {
  out.clear();
  std::vector<std::pair<EpochMs, double>> base;
  if (sealed) {
    if (const auto* e = sealed->find(canonical); e && e->last_ts >= from && e->first_ts < to) {
      const SeriesColumn col = sealed->read(*e);
      for (std::size_t i = 0; i < col.ts.size(); ++i) {
        if (col.ts[i] >= from && col.ts[i] < to) base.emplace_back(col.ts[i], col.values[i]);
      }
    }
  }
  if (!buffer || buffer->empty()) {
    out = std::move(base);
    return;
  }
  auto bit = buffer->lower_bound(from);
  const auto bend = buffer->lower_bound(to);
  std::size_t i = 0;
  while (i < base.size() || bit != bend) {
    if (bit == bend || (i < base.size() && base[i].first < bit->first)) {
      out.push_back(base[i++]);
    } else {
      if (i < base.size() && base[i].first == bit->first) ++i;
      out.emplace_back(bit->first, bit->second);
      ++bit;
    }
  }
}

Json point_to_wal(const SeriesKey& key, EpochMs ts, double value) {
  TagMap tags(key.tags().begin(), key.tags().end());
  return Json{{"m", key.name()}, {"t", tags}, {"ts", ts}, {"v", value}};
}

}  // namespace

struct MetricStore::Partition {
  EpochMs start = 0;
  EpochMs end = 0;
  mutable std::mutex mu;
  struct Buffered {
    SeriesKey key;
    PointMap points;
  };
  std::unordered_map<std::string, Buffered> buffer;  // by canonical key
  std::shared_ptr<const Segment> sealed;
};

MetricStore::MetricStore(StoreOptions options, const Clock& clock) : options_(std::move(options)), clock_(clock) {
  if (options_.partition_ms <= 0) throw Error(Errc::invalid_argument, "partition width must be positive");
  if (options_.data_dir) load();
}

MetricStore::~MetricStore() {
  if (wal_fd_ >= 0) ::close(wal_fd_);
}

EpochMs MetricStore::partition_of(EpochMs ts) const {
  return floor_div(ts, options_.partition_ms) * options_.partition_ms;
}

void MetricStore::load() {
  const fs::path dir = *options_.data_dir / "metrics";
  fs::create_directories(dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".mops") continue;
    auto seg = std::make_shared<const Segment>(Segment::parse(read_file(entry.path())));
    auto p = std::make_shared<Partition>();
    p->start = seg->start();
    p->end = seg->end();
    for (const auto& e : seg->index()) catalog_[e.key.name()].emplace(e.key.canonical(), e.key);
    p->sealed = std::move(seg);
    partitions_[p->start] = std::move(p);
  }
  const fs::path wal = dir / "wal.jsonl";
  if (fs::exists(wal)) {
    std::istringstream in(read_file(wal));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      Json j;
      try {
        j = Json::parse(line);
      } catch (const Json::exception&) {
        break;  // torn final line
      }
      SeriesKey key(j.at("m").get<std::string>(), j.at("t").get<TagMap>());
      const EpochMs ts = j.at("ts").get<EpochMs>();
      const EpochMs start = partition_of(ts);
      auto& p = partitions_[start];
      if (!p) {
        p = std::make_shared<Partition>();
        p->start = start;
        p->end = start + options_.partition_ms;
      }
      catalog_[key.name()].emplace(key.canonical(), key);
      auto& b = p->buffer[key.canonical()];
      b.key = key;
      b.points[ts] = j.at("v").get<double>();
    }
  }
  rewrite_wal_locked();
}

void MetricStore::rewrite_wal_locked() {
  if (!options_.data_dir) return;
  const fs::path path = *options_.data_dir / "metrics" / "wal.jsonl";
  std::string content;
  {
    std::shared_lock lock(mu_);
    for (const auto& [start, p] : partitions_) {
      std::lock_guard pl(p->mu);
      for (const auto& [_, b] : p->buffer) {
        for (const auto& [ts, v] : b.points) content += point_to_wal(b.key, ts, v).dump() + "\n";
      }
    }
  }
  if (wal_fd_ >= 0) ::close(wal_fd_);
  write_file_atomic(path, content, options_.sync);
  wal_fd_ = ::open(path.c_str(), O_WRONLY | O_APPEND);
  if (wal_fd_ < 0) throw Error(Errc::storage, "open WAL: " + std::string(std::strerror(errno)));
}

WriteResult MetricStore::write_points(std::span<const MetricPoint> points) {
  WriteResult result;
  const EpochMs floor = clock_.now_ms() - options_.retention_ms;

  std::vector<const MetricPoint*> accepted;
  accepted.reserve(points.size());
  for (const auto& p : points) {
    if (!std::isfinite(p.value) || p.ts < floor) {
      ++result.rejected;
      continue;
    }
    accepted.push_back(&p);
  }
  if (accepted.empty()) return result;

  std::vector<std::shared_ptr<Partition>> targets(accepted.size());
  {
    std::unique_lock lock(mu_);
    for (std::size_t i = 0; i < accepted.size(); ++i) {
      const MetricPoint& p = *accepted[i];
      auto& series = catalog_[p.series.name()];
      if (!series.count(p.series.canonical())) series.emplace(p.series.canonical(), p.series);
      const EpochMs start = partition_of(p.ts);
      auto& part = partitions_[start];
      if (!part) {
        part = std::make_shared<Partition>();
        part->start = start;
        part->end = start + options_.partition_ms;
      }
      targets[i] = part;
    }
  }

  std::unique_lock wal_lock(wal_mu_);
  if (options_.data_dir) {
    std::string lines;
    for (const MetricPoint* p : accepted) lines += point_to_wal(p->series, p->ts, p->value).dump() + "\n";
    std::string_view rest(lines);
    while (!rest.empty()) {
      ssize_t n = ::write(wal_fd_, rest.data(), rest.size());
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(Errc::storage, "WAL write: " + std::string(std::strerror(errno)));
      }
      rest.remove_prefix(static_cast<std::size_t>(n));
    }
    if (options_.sync) ::fdatasync(wal_fd_);
  }
  Partition* locked = nullptr;
  std::unique_lock<std::mutex> part_lock;
  for (std::size_t i = 0; i < accepted.size(); ++i) {
    if (targets[i].get() != locked) {
      part_lock = std::unique_lock(targets[i]->mu);
      locked = targets[i].get();
    }
    const MetricPoint& p = *accepted[i];
    auto& b = targets[i]->buffer[p.series.canonical()];
    if (b.points.empty()) b.key = p.series;
    b.points[p.ts] = p.value;
  }
  result.accepted = accepted.size();
  return result;
}

std::shared_ptr<const Segment> MetricStore::seal_partition(EpochMs partition_start, EpochMs now) {
  std::shared_ptr<Partition> p;
  {
    std::shared_lock lock(mu_);
    auto it = partitions_.find(partition_start);
    if (it == partitions_.end()) throw Error(Errc::not_found, "no partition at " + std::to_string(partition_start));
    p = it->second;
  }
  if (p->end + options_.lateness_grace_ms > now) {
    throw Error(Errc::invalid_argument, "partition " + std::to_string(partition_start) +
                                            " is still open (window plus lateness grace not elapsed)");
  }

  std::shared_ptr<const Segment> sealed;
  {
    std::lock_guard pl(p->mu);
    if (p->buffer.empty() && p->sealed) return p->sealed;

    std::map<std::string, SeriesKey> keys;
    for (const auto& [canonical, b] : p->buffer) keys.emplace(canonical, b.key);
    if (p->sealed) {
      for (const auto& e : p->sealed->index()) keys.emplace(e.key.canonical(), e.key);
    }

    std::vector<SeriesColumn> columns;
    std::vector<std::pair<EpochMs, double>> merged;
    for (const auto& [canonical, key] : keys) {
      auto bit = p->buffer.find(canonical);
      merge_series(p->sealed.get(), canonical, bit == p->buffer.end() ? nullptr : &bit->second.points, p->start,
                   p->end, merged);
      if (merged.empty()) continue;
      SeriesColumn col;
      col.key = key;
      for (const auto& [ts, v] : merged) {
        col.ts.push_back(ts);
        col.values.push_back(v);
      }
      columns.push_back(std::move(col));
    }
    sealed = std::make_shared<const Segment>(Segment::build(p->start, p->end, columns));
    if (options_.data_dir) {
      write_file_atomic(*options_.data_dir / "metrics" / segment_file_name(p->start), sealed->bytes(), options_.sync);
    }
    p->sealed = sealed;
    p->buffer.clear();
  }
  if (options_.data_dir) {
    std::lock_guard wal_lock(wal_mu_);
    rewrite_wal_locked();
  }
  return sealed;
}

std::size_t MetricStore::seal_ready(EpochMs now) {
  std::vector<EpochMs> ready;
  {
    std::shared_lock lock(mu_);
    for (const auto& [start, p] : partitions_) {
      if (p->end + options_.lateness_grace_ms > now) break;
      std::lock_guard pl(p->mu);
      if (!p->buffer.empty()) ready.push_back(start);
    }
  }
  for (EpochMs start : ready) seal_partition(start, now);
  return ready.size();
}

std::vector<std::pair<EpochMs, std::shared_ptr<MetricStore::Partition>>> MetricStore::snapshot(EpochMs from,
                                                                                                  EpochMs to) const {
  std::vector<std::pair<EpochMs, std::shared_ptr<Partition>>> out;
  std::shared_lock lock(mu_);
  for (auto it = partitions_.lower_bound(partition_of(from)); it != partitions_.end() && it->first < to; ++it) {
    out.emplace_back(it->first, it->second);
  }
  return out;
}

QueryResult MetricStore::query(const Query& q) const {
  validate(q);
  QueryResult result;
  result.columns = q.group_by;
  result.columns.push_back("time");
  result.columns.push_back(to_string(q.aggregate));

  std::vector<SeriesKey> series;
  {
    std::shared_lock lock(mu_);
    auto it = catalog_.find(q.metric);
    if (it == catalog_.end()) return result;
    for (const auto& [canonical, key] : it->second) {
      const bool match = std::all_of(q.filters.begin(), q.filters.end(), [&](const TagFilter& f) {
        return key.has_tag(f.key) && key.tag(f.key) == f.value;
      });
      if (match) series.push_back(key);
    }
  }
  if (series.empty()) return result;

  struct Acc {
    double sum = 0.0;
    std::uint64_t count = 0;
    double min = 0.0;
    double max = 0.0;
    EpochMs last_ts = 0;
    const std::string* last_series = nullptr;
    double last = 0.0;
  };
  std::map<std::pair<std::vector<std::string>, EpochMs>, Acc> cells;

  std::vector<std::pair<EpochMs, double>> merged;
  for (const auto& [start, p] : snapshot(q.from, q.to)) {
    std::shared_ptr<const Segment> sealed;
    std::vector<PointMap> buffers(series.size());
    {
      std::lock_guard pl(p->mu);
      sealed = p->sealed;
      for (std::size_t i = 0; i < series.size(); ++i) {
        if (auto it = p->buffer.find(series[i].canonical()); it != p->buffer.end()) {
          const PointMap& pts = it->second.points;
          buffers[i].insert(pts.lower_bound(q.from), pts.lower_bound(q.to));
        }
      }
    }
    for (std::size_t i = 0; i < series.size(); ++i) {
      merge_series(sealed.get(), series[i].canonical(), &buffers[i], q.from, q.to, merged);
      if (merged.empty()) continue;
      std::vector<std::string> group;
      group.reserve(q.group_by.size());
      for (const auto& k : q.group_by) group.push_back(series[i].tag(k));
      for (const auto& [ts, v] : merged) {
        Acc& a = cells[{group, bucket_start(q, ts)}];
        if (a.count == 0) {
          a.min = a.max = v;
        } else {
          a.min = std::min(a.min, v);
          a.max = std::max(a.max, v);
        }
        a.sum += v;
        ++a.count;
        if (!a.last_series || ts > a.last_ts ||
            (ts == a.last_ts && series[i].canonical() > *a.last_series)) {
          a.last_ts = ts;
          a.last = v;
          a.last_series = &series[i].canonical();
        }
      }
    }
  }

  result.rows.reserve(cells.size());
  for (const auto& [key, a] : cells) {
    double v = 0.0;
    switch (q.aggregate) {
      case Aggregate::avg: v = a.sum / static_cast<double>(a.count); break;
      case Aggregate::min: v = a.min; break;
      case Aggregate::max: v = a.max; break;
      case Aggregate::sum: v = a.sum; break;
      case Aggregate::count: v = static_cast<double>(a.count); break;
      case Aggregate::last: v = a.last; break;
    }
    result.rows.push_back(ResultRow{key.first, key.second, v});
  }
  return result;
}

std::vector<EpochMs> MetricStore::enforce_retention(EpochMs now) {
  const EpochMs floor = now - options_.retention_ms;
  std::vector<EpochMs> dropped;
  {
    std::unique_lock lock(mu_);
    for (auto it = partitions_.begin(); it != partitions_.end() && it->second->end <= floor;) {
      dropped.push_back(it->first);
      it = partitions_.erase(it);
    }
  }
  if (options_.data_dir && !dropped.empty()) {
    for (EpochMs start : dropped) {
      std::error_code ec;
      fs::remove(*options_.data_dir / "metrics" / segment_file_name(start), ec);
    }
    std::lock_guard wal_lock(wal_mu_);
    rewrite_wal_locked();
  }
  return dropped;
}

std::vector<MetricPoint> MetricStore::scan(const std::string& metric) const {
  std::vector<SeriesKey> series;
  {
    std::shared_lock lock(mu_);
    for (const auto& [name, keys] : catalog_) {
      if (!metric.empty() && name != metric) continue;
      for (const auto& [_, key] : keys) series.push_back(key);
    }
  }
  std::vector<MetricPoint> out;
  std::vector<std::pair<EpochMs, double>> merged;
  for (const auto& [start, p] : snapshot(std::numeric_limits<EpochMs>::min() / 2, kOpenEnd)) {
    std::lock_guard pl(p->mu);
    for (const auto& key : series) {
      auto it = p->buffer.find(key.canonical());
      merge_series(p->sealed.get(), key.canonical(), it == p->buffer.end() ? nullptr : &it->second.points, p->start,
                   p->end, merged);
      for (const auto& [ts, v] : merged) out.push_back(MetricPoint{key, ts, v});
    }
  }
  std::sort(out.begin(), out.end(), [](const MetricPoint& a, const MetricPoint& b) {
    return a.series.canonical() != b.series.canonical() ? a.series < b.series : a.ts < b.ts;
  });
  return out;
}

std::uint64_t MetricStore::count_points() const { return scan().size(); }

StoreStats MetricStore::stats() const {
  StoreStats st;
  std::shared_lock lock(mu_);
  st.partitions = partitions_.size();
  for (const auto& [_, p] : partitions_) {
    std::lock_guard pl(p->mu);
    if (p->sealed) {
      ++st.sealed_partitions;
      st.sealed_bytes += p->sealed->bytes().size();
    }
  }
  for (const auto& [_, keys] : catalog_) st.series += keys.size();
  return st;
}

std::vector<EpochMs> MetricStore::partition_starts() const {
  std::shared_lock lock(mu_);
  std::vector<EpochMs> out;
  for (const auto& [start, _] : partitions_) out.push_back(start);
  return out;
}

}  // namespace miniops::tsstore
