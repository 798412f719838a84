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

#include "miniops/mqueue/broker.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <deque>
#include <mutex>

#include "miniops/common/codec.hpp"
#include "miniops/common/error.hpp"
#include "miniops/common/fsutil.hpp"
#include "miniops/common/json.hpp"

namespace miniops::mqueue {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kFrameOverhead = 8;

void put_u32le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32le(const char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

std::string segment_file_name(std::uint64_t first_offset) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%020llu.seg", static_cast<unsigned long long>(first_offset));
  return buf;
}

[[noreturn]] void throw_errno(const std::string& what) {
  throw Error(Errc::storage, what + ": " + std::strerror(errno));
}

void write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("segment write");
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

int open_for_append(const fs::path& path) {
  int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw_errno("open " + path.string());
  return fd;
}

EpochMs mtime_ms(const fs::path& path) {
  struct stat st {};
  if (::stat(path.c_str(), &st) != 0) return 0;
  return static_cast<EpochMs>(st.st_mtim.tv_sec) * 1000 + st.st_mtim.tv_nsec / 1000000;
}

fs::path offsets_file(const fs::path& topic_dir, const std::string& group) {
  return topic_dir / "offsets" / (group + ".json");
}

}  // namespace

bool valid_name(std::string_view name) {
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
  }) && name != "." && name != "..";
}

struct Broker::Topic {
  struct Segment {
    std::uint64_t first_offset = 0;
    fs::path path;
    std::uint64_t size = 0;
    std::vector<std::uint64_t> positions;
    std::vector<EpochMs> enqueued;
    EpochMs last_append = 0;

    std::uint64_t end_offset() const { return first_offset + positions.size(); }
  };

  std::string name;
  fs::path dir;

  // Guards segments and active_fd. Lock order: mu, then groups_mu.
  mutable std::shared_mutex mu;
  std::deque<Segment> segments;
  int active_fd = -1;

  mutable std::mutex groups_mu;
  std::map<std::string, std::uint64_t> committed;

  ~Topic() {
    if (active_fd >= 0) ::close(active_fd);
  }

  std::uint64_t head() const { return segments.back().end_offset(); }
  std::uint64_t first_offset() const { return segments.front().first_offset; }

  void reopen_active() {
    if (active_fd >= 0) ::close(active_fd);
    active_fd = -1;
    active_fd = open_for_append(segments.back().path);
  }
};

Broker::Broker(fs::path root, BrokerOptions options, const Clock& clock)
    : root_(std::move(root)), options_(options), clock_(clock) {
  fs::create_directories(root_);
  for (const auto& entry : fs::directory_iterator(root_)) {
    if (!entry.is_directory()) continue;
    const std::string name = entry.path().filename().string();
    if (!valid_name(name)) continue;
    auto topic = load_topic(name);
    for (const auto& seg : topic->segments) bytes_used_ += seg.size;
    topics_.emplace(name, std::move(topic));
  }
}

Broker::~Broker() = default;

std::unique_ptr<Broker::Topic> Broker::load_topic(const std::string& name) {
  auto t = std::make_unique<Topic>();
  t->name = name;
  t->dir = root_ / name;
  fs::create_directories(t->dir / "offsets");

  std::vector<std::pair<std::uint64_t, fs::path>> files;
  for (const auto& entry : fs::directory_iterator(t->dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".seg") continue;
    const std::string stem = entry.path().stem().string();
    try {
      files.emplace_back(std::stoull(stem), entry.path());
    } catch (const std::exception&) {
      throw Error(Errc::corrupt, "unexpected segment file " + entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());

  for (const auto& entry : fs::directory_iterator(t->dir / "offsets")) {
    if (entry.path().extension() != ".json") continue;
    const Json j = Json::parse(read_file(entry.path()));
    t->committed[entry.path().stem().string()] = j.at("committed").get<std::uint64_t>();
  }

  for (std::size_t i = 0; i < files.size(); ++i) {
    const auto& [first, path] = files[i];
    const bool last = i + 1 == files.size();
    Topic::Segment seg;
    seg.first_offset = first;
    seg.path = path;
    seg.last_append = mtime_ms(path);
    if (!t->segments.empty() && t->segments.back().end_offset() != first) {
      throw Error(Errc::corrupt, "offset gap before segment " + path.string());
    }

    const std::string data = read_file(path);
    std::uint64_t pos = 0;
    while (pos < data.size()) {
      bool ok = data.size() - pos >= kFrameOverhead;
      std::uint32_t len = 0;
      if (ok) {
        len = get_u32le(data.data() + pos);
        ok = data.size() - pos >= kFrameOverhead + len;
      }
      if (ok) {
        std::string_view payload(data.data() + pos + 4, len);
        ok = crc32(payload) == get_u32le(data.data() + pos + 4 + len);
      }
      if (!ok) {
        if (!last) throw Error(Errc::corrupt, "damaged record in sealed segment " + path.string());
        // Torn tail of the active segment: the append never returned, drop it.
        if (::truncate(path.c_str(), static_cast<off_t>(pos)) != 0) throw_errno("truncate");
        break;
      }
      seg.positions.push_back(pos);
      seg.enqueued.push_back(seg.last_append);
      pos += kFrameOverhead + len;
    }
    seg.size = pos;
    t->segments.push_back(std::move(seg));
  }

  if (t->segments.empty()) {
    std::uint64_t start = 0;
    for (const auto& [g, c] : t->committed) start = std::max(start, c);
    Topic::Segment seg;
    seg.first_offset = start;
    seg.path = t->dir / segment_file_name(start);
    t->segments.push_back(std::move(seg));
  }
  for (auto& [g, c] : t->committed) c = std::min(c, t->head());
  t->reopen_active();
  return t;
}

Broker::Topic& Broker::topic_or_create(const std::string& name) {
  {
    std::shared_lock lock(topics_mu_);
    if (auto it = topics_.find(name); it != topics_.end()) return *it->second;
  }
  if (!valid_name(name)) throw Error(Errc::invalid_argument, "invalid topic name '" + name + "'");
  std::unique_lock lock(topics_mu_);
  if (auto it = topics_.find(name); it != topics_.end()) return *it->second;
  fs::create_directories(root_ / name / "offsets");
  auto topic = load_topic(name);
  if (options_.sync) fsync_directory(root_ / name);
  if (options_.sync) fsync_directory(root_);
  auto& ref = *topic;
  topics_.emplace(name, std::move(topic));
  return ref;
}

Broker::Topic* Broker::find_topic(const std::string& name) const {
  std::shared_lock lock(topics_mu_);
  auto it = topics_.find(name);
  return it == topics_.end() ? nullptr : it->second.get();
}

std::uint64_t Broker::publish(const std::string& topic, std::string_view payload) {
  return publish_batch({{topic, std::string(payload)}}).at(topic);
}

std::map<std::string, std::uint64_t> Broker::publish_batch(
    const std::vector<std::pair<std::string, std::string>>& entries) {
  std::map<std::string, std::vector<const std::string*>> by_topic;
  std::uint64_t total = 0;
  for (const auto& [topic, payload] : entries) {
    if (!valid_name(topic)) throw Error(Errc::invalid_argument, "invalid topic name '" + topic + "'");
    if (payload.size() > 0xffffffffull) throw Error(Errc::invalid_argument, "payload too large");
    by_topic[topic].push_back(&payload);
    total += kFrameOverhead + payload.size();
  }
  if (by_topic.empty()) return {};

  {
    std::lock_guard lock(bytes_mu_);
    if (options_.capacity_bytes != 0 && bytes_used_ + total > options_.capacity_bytes) {
      throw Error(Errc::storage, "queue storage full");
    }
  }

  // Topics are locked in name order so concurrent multi-topic batches cannot deadlock.
  std::vector<Topic*> topics;
  for (const auto& [name, _] : by_topic) topics.push_back(&topic_or_create(name));
  std::vector<std::unique_lock<std::shared_mutex>> locks;
  for (Topic* t : topics) locks.emplace_back(t->mu);

  struct Snapshot {
    Topic* topic;
    std::size_t segment_count;
    std::uint64_t active_size;
    std::size_t active_records;
  };
  std::vector<Snapshot> snapshots;
  const EpochMs now = clock_.now_ms();
  std::map<std::string, std::uint64_t> last_offsets;

  try {
    std::size_t ti = 0;
    for (const auto& [name, payloads] : by_topic) {
      Topic& t = *topics[ti++];
      snapshots.push_back({&t, t.segments.size(), t.segments.back().size, t.segments.back().positions.size()});
      bool rolled = false;
      std::string buf;
      for (const std::string* payload : payloads) {
        const std::uint64_t frame = kFrameOverhead + payload->size();
        Topic::Segment* seg = &t.segments.back();
        if (seg->size > 0 && seg->size + frame > options_.segment_bytes) {
          write_all(t.active_fd, buf);
          buf.clear();
          if (options_.sync && ::fdatasync(t.active_fd) != 0) throw_errno("fdatasync");
          Topic::Segment next;
          next.first_offset = seg->end_offset();
          next.path = t.dir / segment_file_name(next.first_offset);
          t.segments.push_back(std::move(next));
          t.reopen_active();
          seg = &t.segments.back();
          rolled = true;
        }
        seg->positions.push_back(seg->size);
        seg->enqueued.push_back(now);
        seg->size += frame;
        seg->last_append = now;
        put_u32le(buf, static_cast<std::uint32_t>(payload->size()));
        buf.append(*payload);
        put_u32le(buf, crc32(*payload));
      }
      write_all(t.active_fd, buf);
      if (options_.sync && ::fdatasync(t.active_fd) != 0) throw_errno("fdatasync");
      if (rolled && options_.sync) fsync_directory(t.dir);
      last_offsets[name] = t.head() - 1;
    }
  } catch (...) {
    for (const auto& s : snapshots) {
      Topic& t = *s.topic;
      while (t.segments.size() > s.segment_count) {
        std::error_code ec;
        fs::remove(t.segments.back().path, ec);
        t.segments.pop_back();
      }
      auto& seg = t.segments.back();
      seg.positions.resize(s.active_records);
      seg.enqueued.resize(s.active_records);
      seg.size = s.active_size;
      if (::truncate(seg.path.c_str(), static_cast<off_t>(s.active_size)) == 0) {
        try {
          t.reopen_active();
        } catch (...) {
        }
      }
    }
    throw;
  }

  std::lock_guard lock(bytes_mu_);
  bytes_used_ += total;
  return last_offsets;
}

std::vector<Message> Broker::poll(const std::string& group, const std::string& topic,
                                  std::size_t max_messages) const {
  Topic* t = find_topic(topic);
  if (!t) throw Error(Errc::not_found, "group '" + group + "' is not registered on topic '" + topic + "'");
  std::shared_lock lock(t->mu);
  std::uint64_t from = 0;
  {
    std::lock_guard g(t->groups_mu);
    auto it = t->committed.find(group);
    if (it == t->committed.end()) {
      throw Error(Errc::not_found, "group '" + group + "' is not registered on topic '" + topic + "'");
    }
    from = it->second;
  }
  from = std::max(from, t->first_offset());
  const std::uint64_t end = std::min(t->head(), from + max_messages);

  std::vector<Message> out;
  out.reserve(static_cast<std::size_t>(end - from));
  auto seg_it = std::upper_bound(t->segments.begin(), t->segments.end(), from,
                                 [](std::uint64_t off, const Topic::Segment& s) { return off < s.first_offset; });
  if (seg_it != t->segments.begin()) --seg_it;

  std::uint64_t offset = from;
  for (; offset < end && seg_it != t->segments.end(); ++seg_it) {
    const auto& seg = *seg_it;
    if (offset >= seg.end_offset()) continue;
    const std::uint64_t stop = std::min(end, seg.end_offset());
    const std::size_t first_idx = static_cast<std::size_t>(offset - seg.first_offset);
    const std::size_t last_idx = static_cast<std::size_t>(stop - seg.first_offset);
    const std::uint64_t begin_pos = seg.positions[first_idx];
    const std::uint64_t end_pos = last_idx < seg.positions.size() ? seg.positions[last_idx] : seg.size;

    std::string data(static_cast<std::size_t>(end_pos - begin_pos), '\0');
    int fd = ::open(seg.path.c_str(), O_RDONLY);
    if (fd < 0) throw_errno("open " + seg.path.string());
    std::size_t got = 0;
    while (got < data.size()) {
      ssize_t n = ::pread(fd, data.data() + got, data.size() - got, static_cast<off_t>(begin_pos + got));
      if (n <= 0) {
        if (n < 0 && errno == EINTR) continue;
        ::close(fd);
        throw Error(Errc::corrupt, "short read in " + seg.path.string());
      }
      got += static_cast<std::size_t>(n);
    }
    ::close(fd);

    for (std::size_t i = first_idx; i < last_idx; ++i) {
      const std::size_t p = static_cast<std::size_t>(seg.positions[i] - begin_pos);
      const std::uint32_t len = get_u32le(data.data() + p);
      Message m;
      m.topic = topic;
      m.offset = seg.first_offset + i;
      m.payload.assign(data.data() + p + 4, len);
      m.crc = get_u32le(data.data() + p + 4 + len);
      m.enqueued_at = seg.enqueued[i];
      if (crc32(m.payload) != m.crc) {
        throw Error(Errc::corrupt, "crc mismatch at offset " + std::to_string(m.offset) + " of " + topic);
      }
      out.push_back(std::move(m));
    }
    offset = stop;
  }
  return out;
}

void Broker::commit(const std::string& group, const std::string& topic, std::uint64_t offset) {
  Topic* t = find_topic(topic);
  if (!t) throw Error(Errc::not_found, "group '" + group + "' is not registered on topic '" + topic + "'");
  std::shared_lock lock(t->mu);
  std::lock_guard g(t->groups_mu);
  auto it = t->committed.find(group);
  if (it == t->committed.end()) {
    throw Error(Errc::not_found, "group '" + group + "' is not registered on topic '" + topic + "'");
  }
  if (offset > t->head()) {
    throw Error(Errc::invalid_argument, "commit offset " + std::to_string(offset) + " beyond head " +
                                            std::to_string(t->head()));
  }
  if (offset <= it->second) return;
  write_file_atomic(offsets_file(t->dir, group), Json{{"committed", offset}}.dump(), options_.sync);
  it->second = offset;
}

std::size_t Broker::trim(const std::string& topic) {
  Topic* t = find_topic(topic);
  if (!t) return 0;
  std::unique_lock lock(t->mu);
  std::lock_guard g(t->groups_mu);
  if (t->committed.empty()) return 0;
  std::uint64_t floor = UINT64_MAX;
  for (const auto& [_, c] : t->committed) floor = std::min(floor, c);
  const EpochMs now = clock_.now_ms();

  std::size_t reclaimed = 0;
  std::uint64_t bytes = 0;
  // The active segment is never trimmed: it anchors the head offset.
  while (t->segments.size() > 1) {
    const auto& front = t->segments.front();
    if (front.end_offset() > floor) break;
    if (front.last_append > now - options_.retention_floor_ms) break;
    if (::unlink(front.path.c_str()) != 0 && errno != ENOENT) throw_errno("unlink " + front.path.string());
    bytes += front.size;
    t->segments.pop_front();
    ++reclaimed;
  }
  if (reclaimed > 0) {
    if (options_.sync) fsync_directory(t->dir);
    std::lock_guard b(bytes_mu_);
    bytes_used_ -= bytes;
  }
  return reclaimed;
}

void Broker::register_group(const std::string& group, const std::string& topic, StartAt start) {
  if (!valid_name(group)) throw Error(Errc::invalid_argument, "invalid group name '" + group + "'");
  Topic& t = topic_or_create(topic);
  std::shared_lock lock(t.mu);
  std::lock_guard g(t.groups_mu);
  if (t.committed.count(group)) {
    throw Error(Errc::already_exists, "group '" + group + "' already registered on '" + topic + "'");
  }
  const std::uint64_t offset = start == StartAt::earliest ? t.first_offset() : t.head();
  write_file_atomic(offsets_file(t.dir, group), Json{{"committed", offset}}.dump(), options_.sync);
  t.committed[group] = offset;
}

bool Broker::has_topic(const std::string& topic) const { return find_topic(topic) != nullptr; }

bool Broker::has_group(const std::string& group, const std::string& topic) const {
  Topic* t = find_topic(topic);
  if (!t) return false;
  std::lock_guard g(t->groups_mu);
  return t->committed.count(group) > 0;
}

std::uint64_t Broker::head(const std::string& topic) const {
  Topic* t = find_topic(topic);
  if (!t) return 0;
  std::shared_lock lock(t->mu);
  return t->head();
}

std::uint64_t Broker::committed(const std::string& group, const std::string& topic) const {
  Topic* t = find_topic(topic);
  if (!t) throw Error(Errc::not_found, "unknown topic '" + topic + "'");
  std::lock_guard g(t->groups_mu);
  auto it = t->committed.find(group);
  if (it == t->committed.end()) throw Error(Errc::not_found, "unknown group '" + group + "'");
  return it->second;
}

TopicStats Broker::stats(const std::string& topic) const {
  Topic* t = find_topic(topic);
  if (!t) throw Error(Errc::not_found, "unknown topic '" + topic + "'");
  std::shared_lock lock(t->mu);
  std::lock_guard g(t->groups_mu);
  return TopicStats{t->first_offset(), t->head(), t->segments.size(), t->committed};
}

std::vector<std::string> Broker::topics() const {
  std::shared_lock lock(topics_mu_);
  std::vector<std::string> names;
  for (const auto& [name, _] : topics_) names.push_back(name);
  return names;
}

std::uint64_t Broker::bytes_used() const {
  std::lock_guard lock(bytes_mu_);
  return bytes_used_;
}

}  // namespace miniops::mqueue
