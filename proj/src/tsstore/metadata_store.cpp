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

#include "miniops/tsstore/metadata_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <sstream>

#include "miniops/common/error.hpp"
#include "miniops/common/fsutil.hpp"

namespace miniops::tsstore {

namespace fs = std::filesystem;

MetadataStore::MetadataStore(std::optional<fs::path> journal, bool sync) : journal_(std::move(journal)), sync_(sync) {
  if (!journal_) return;
  if (journal_->has_parent_path()) fs::create_directories(journal_->parent_path());
  if (fs::exists(*journal_)) {
    std::istringstream in(read_file(*journal_));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      Json op;
      try {
        op = Json::parse(line);
      } catch (const Json::exception&) {
        break;  // torn tail
      }
      const auto ns = op.at("ns").get<std::string>();
      const auto key = op.at("key").get<std::string>();
      if (op.at("op") == "put") {
        data_[ns][key] = op.at("value");
      } else {
        data_[ns].erase(key);
      }
    }
  }
  compact();
}

MetadataStore::~MetadataStore() {
  if (fd_ >= 0) ::close(fd_);
}

void MetadataStore::append(const Json& op) {
  if (!journal_) return;
  const std::string line = op.dump() + "\n";
  if (::write(fd_, line.data(), line.size()) != static_cast<ssize_t>(line.size())) {
    throw Error(Errc::storage, "metadata journal write: " + std::string(std::strerror(errno)));
  }
  if (sync_) ::fdatasync(fd_);
}

void MetadataStore::put(const std::string& ns, const std::string& key, const Json& value) {
  std::lock_guard lock(mu_);
  append(Json{{"op", "put"}, {"ns", ns}, {"key", key}, {"value", value}});
  data_[ns][key] = value;
}

std::optional<Json> MetadataStore::get(const std::string& ns, const std::string& key) const {
  std::lock_guard lock(mu_);
  auto n = data_.find(ns);
  if (n == data_.end()) return std::nullopt;
  auto it = n->second.find(key);
  if (it == n->second.end()) return std::nullopt;
  return it->second;
}

bool MetadataStore::erase(const std::string& ns, const std::string& key) {
  std::lock_guard lock(mu_);
  auto n = data_.find(ns);
  if (n == data_.end() || !n->second.count(key)) return false;
  append(Json{{"op", "erase"}, {"ns", ns}, {"key", key}});
  n->second.erase(key);
  return true;
}

std::map<std::string, Json> MetadataStore::list(const std::string& ns) const {
  std::lock_guard lock(mu_);
  auto n = data_.find(ns);
  return n == data_.end() ? std::map<std::string, Json>{} : n->second;
}

void MetadataStore::compact() {
  if (!journal_) return;
  std::lock_guard lock(mu_);
  std::string content;
  for (const auto& [ns, entries] : data_) {
    for (const auto& [key, value] : entries) {
      content += Json{{"op", "put"}, {"ns", ns}, {"key", key}, {"value", value}}.dump() + "\n";
    }
  }
  if (fd_ >= 0) ::close(fd_);
  write_file_atomic(*journal_, content, sync_);
  fd_ = ::open(journal_->c_str(), O_WRONLY | O_APPEND);
  if (fd_ < 0) throw Error(Errc::storage, "open metadata journal: " + std::string(std::strerror(errno)));
}

}  // namespace miniops::tsstore
