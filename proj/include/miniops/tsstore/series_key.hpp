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

#include <string>
#include <utility>
#include <vector>

#include "miniops/common/clock.hpp"
#include "miniops/common/record.hpp"

namespace miniops::tsstore {

/// Metric name plus tag pairs sorted by key. Every stored series carries a "server" tag.
class SeriesKey {
 public:
  using Tag = std::pair<std::string, std::string>;

  SeriesKey() = default;
  SeriesKey(std::string name, const TagMap& tags);
  SeriesKey(std::string name, const TagMap& tags, const std::string& server);

  const std::string& name() const { return name_; }
  const std::vector<Tag>& tags() const { return tags_; }

  // Empty string when the tag is absent.
  const std::string& tag(const std::string& key) const;
  bool has_tag(const std::string& key) const;

  // name{k1=v1,k2=v2}, with '\\', ',', '=', '{' and '}' escaped. Two keys are equal
  // iff their canonical forms are equal.
  const std::string& canonical() const { return canonical_; }

  friend bool operator==(const SeriesKey& a, const SeriesKey& b) { return a.canonical_ == b.canonical_; }
  friend bool operator<(const SeriesKey& a, const SeriesKey& b) { return a.canonical_ < b.canonical_; }

 private:
  void build();

  std::string name_;
  std::vector<Tag> tags_;
  std::string canonical_;
};

struct MetricPoint {
  SeriesKey series;
  EpochMs ts = 0;
  double value = 0.0;
};

struct LogEvent {
  EpochMs ts = 0;
  std::string server;
  std::string level;
  std::string message;
  TagMap fields;

  friend bool operator==(const LogEvent&, const LogEvent&) = default;
};

}  // namespace miniops::tsstore
