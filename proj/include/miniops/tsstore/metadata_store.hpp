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

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "miniops/common/json.hpp"

namespace miniops::tsstore {

/// Small strongly consistent key-value store for fleet, rule and ticket records.
/// Keys live in namespaces; every mutation is appended to a journal before it is
/// visible, so a reopened store replays to the same state.
class MetadataStore {
 public:
  // In-memory only when journal is empty.
  explicit MetadataStore(std::optional<std::filesystem::path> journal = std::nullopt, bool sync = true);
  ~MetadataStore();

  MetadataStore(const MetadataStore&) = delete;
  MetadataStore& operator=(const MetadataStore&) = delete;

  void put(const std::string& ns, const std::string& key, const Json& value);
  std::optional<Json> get(const std::string& ns, const std::string& key) const;
  bool erase(const std::string& ns, const std::string& key);
  std::map<std::string, Json> list(const std::string& ns) const;

  // Rewrites the journal as one put per live key.
  void compact();

 private:
  void append(const Json& op);

  std::optional<std::filesystem::path> journal_;
  bool sync_;
  int fd_ = -1;
  mutable std::mutex mu_;
  std::map<std::string, std::map<std::string, Json>> data_;
};

}  // namespace miniops::tsstore
