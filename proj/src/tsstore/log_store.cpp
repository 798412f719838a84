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

#include "miniops/tsstore/log_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>

#include "miniops/common/error.hpp"
#include "miniops/common/fsutil.hpp"
#include "miniops/common/json.hpp"

namespace miniops::tsstore {

namespace fs = std::filesystem;

namespace {

Json event_to_json(const LogEvent& e) {
  return Json{{"ts", e.ts}, {"server", e.server}, {"level", e.level}, {"message", e.message}, {"fields", e.fields}};
}

LogEvent event_from_json(const Json& j) {
  return LogEvent{j.at("ts").get<EpochMs>(), j.at("server").get<std::string>(), j.at("level").get<std::string>(),
                  j.at("message").get<std::string>(), j.at("fields").get<TagMap>()};
}

}  // namespace

bool matches(const LogFilter& f, const LogEvent& e) {
  if (e.ts < f.from || e.ts >= f.to) return false;
  if (f.level && e.level != *f.level) return false;
  if (f.server && e.server != *f.server) return false;
  if (f.contains && e.message.find(*f.contains) == std::string::npos) return false;
  return true;
}

LogStore::LogStore(LogStoreOptions options) : options_(std::move(options)) {
  if (!options_.data_dir) return;
  const fs::path dir = *options_.data_dir / "logs";
  fs::create_directories(dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".jsonl") continue;
    std::istringstream in(read_file(entry.path()));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        LogEvent e = event_from_json(Json::parse(line));
        auto& part = partitions_[partition_of(e.ts)];
        auto pos = std::upper_bound(part.begin(), part.end(), e.ts,
                                    [](EpochMs ts, const LogEvent& x) { return ts < x.ts; });
        part.insert(pos, std::move(e));
      } catch (const Json::exception&) {
        break;  // torn tail
      }
    }
  }
}

EpochMs LogStore::partition_of(EpochMs ts) const {
  EpochMs q = ts / options_.partition_ms;
  if (ts % options_.partition_ms != 0 && ts < 0) --q;
  return q * options_.partition_ms;
}

fs::path LogStore::file_for(EpochMs start) const {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%020lld.jsonl", static_cast<long long>(start));
  return *options_.data_dir / "logs" / buf;
}

void LogStore::store(std::span<const LogEvent> events) {
  for (const auto& e : events) {
    if (e.message.empty()) throw Error(Errc::invalid_argument, "log event message must be non-empty");
  }
  std::unique_lock lock(mu_);
  if (options_.data_dir) {
    std::map<EpochMs, std::string> lines;
    for (const auto& e : events) lines[partition_of(e.ts)] += event_to_json(e).dump() + "\n";
    for (const auto& [start, text] : lines) {
      const fs::path path = file_for(start);
      int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
      if (fd < 0) throw Error(Errc::storage, "open " + path.string());
      const bool ok = ::write(fd, text.data(), text.size()) == static_cast<ssize_t>(text.size());
      if (options_.sync) ::fdatasync(fd);
      ::close(fd);
      if (!ok) throw Error(Errc::storage, "short write to " + path.string());
    }
  }
  for (const auto& e : events) {
    auto& part = partitions_[partition_of(e.ts)];
    auto pos = std::upper_bound(part.begin(), part.end(), e.ts, [](EpochMs ts, const LogEvent& x) { return ts < x.ts; });
    part.insert(pos, e);
  }
}

std::vector<LogEvent> LogStore::query(const LogFilter& filter) const {
  std::vector<LogEvent> out;
  if (filter.from >= filter.to) return out;
  std::shared_lock lock(mu_);
  auto it = filter.from <= std::numeric_limits<EpochMs>::min() + options_.partition_ms
                 ? partitions_.begin()
                 : partitions_.lower_bound(partition_of(filter.from));
  for (; it != partitions_.end() && it->first < filter.to; ++it) {
    for (const auto& e : it->second) {
      if (!matches(filter, e)) continue;
      out.push_back(e);
      if (filter.limit && out.size() == filter.limit) return out;
    }
  }
  return out;
}

std::vector<EpochMs> LogStore::enforce_retention(EpochMs now) {
  const EpochMs floor = now - options_.retention_ms;
  std::vector<EpochMs> dropped;
  std::unique_lock lock(mu_);
  for (auto it = partitions_.begin(); it != partitions_.end() && it->first + options_.partition_ms <= floor;) {
    dropped.push_back(it->first);
    if (options_.data_dir) {
      std::error_code ec;
      fs::remove(file_for(it->first), ec);
    }
    it = partitions_.erase(it);
  }
  return dropped;
}

std::size_t LogStore::size() const {
  std::shared_lock lock(mu_);
  std::size_t n = 0;
  for (const auto& [_, p] : partitions_) n += p.size();
  return n;
}

}  // namespace miniops::tsstore
