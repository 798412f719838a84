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

#include "miniops/agent/spool.hpp"

#include <algorithm>
#include <cstdio>

#include "miniops/common/error.hpp"
#include "miniops/common/fsutil.hpp"

namespace miniops::agent {

namespace fs = std::filesystem;

Spool::Spool(std::optional<fs::path> dir, std::size_t capacity_batches, bool sync)
    : dir_(std::move(dir)), capacity_(capacity_batches), sync_(sync) {
  if (capacity_ == 0) throw Error(Errc::invalid_argument, "spool capacity must be positive");
  if (!dir_) return;
  fs::create_directories(*dir_);
  std::vector<std::pair<std::uint64_t, fs::path>> files;
  for (const auto& e : fs::directory_iterator(*dir_)) {
    const auto name = e.path().filename().string();
    if (e.path().extension() != ".batch") continue;  // skips leftover .tmp files
    try {
      files.emplace_back(std::stoull(name), e.path());
    } catch (const std::exception&) {
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& [seq, path] : files) {
    try {
      entries_.push_back({seq, batch_from_json(Json::parse(read_file(path))), false});
    } catch (const std::exception& e) {
      std::fprintf(stderr, "spool: discarding unreadable %s: %s\n", path.c_str(), e.what());
      std::error_code ec;
      fs::remove(path, ec);
      continue;
    }
    next_seq_ = seq + 1;
  }
  while (entries_.size() > capacity_) {
    std::error_code ec;
    fs::remove(file_for(entries_.front().seq), ec);
    entries_.pop_front();
    ++evictions_;
  }
}

fs::path Spool::file_for(std::uint64_t seq) const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%020llu.batch", static_cast<unsigned long long>(seq));
  return *dir_ / buf;
}

AppendReport Spool::append(const Batch& batch) {
  if (batch.records.empty()) throw Error(Errc::invalid_argument, "cannot spool an empty batch");
  std::lock_guard lock(mu_);
  AppendReport report;
  const std::uint64_t seq = next_seq_++;
  bool is_volatile = !dir_;
  if (dir_) {
    try {
      write_file_atomic(file_for(seq), batch_to_json(batch).dump(), sync_);
    } catch (const std::exception&) {
      is_volatile = true;
      report.volatile_entry = true;
    }
  }
  entries_.push_back({seq, batch, is_volatile});
  while (entries_.size() > capacity_) {
    Entry& old = entries_.front();
    if (dir_ && !old.is_volatile) {
      std::error_code ec;
      fs::remove(file_for(old.seq), ec);
    }
    report.evicted.push_back(std::move(old.batch));
    entries_.pop_front();
    ++evictions_;
  }
  return report;
}

std::optional<Batch> Spool::front() const {
  std::lock_guard lock(mu_);
  if (entries_.empty()) return std::nullopt;
  return entries_.front().batch;
}

bool Spool::remove(const std::string& batch_id) {
  std::lock_guard lock(mu_);
  for (auto it = entries_.begin(); it != entries_.end(); ++it) {
    if (it->batch.batch_id != batch_id) continue;
    if (dir_ && !it->is_volatile) {
      std::error_code ec;
      fs::remove(file_for(it->seq), ec);
    }
    entries_.erase(it);
    return true;
  }
  return false;
}

std::size_t Spool::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::vector<std::string> Spool::batch_ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& e : entries_) out.push_back(e.batch.batch_id);
  return out;
}

std::uint64_t Spool::evictions() const {
  std::lock_guard lock(mu_);
  return evictions_;
}

std::size_t Spool::volatile_entries() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.is_volatile && dir_ ? 1 : 0;
  return n;
}

}  // namespace miniops::agent
