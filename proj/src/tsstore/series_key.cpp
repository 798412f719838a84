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

#include "miniops/tsstore/series_key.hpp"

#include <algorithm>

namespace miniops::tsstore {

namespace {

void append_escaped(std::string& out, const std::string& s) {
  for (char c : s) {
    if (c == '\\' || c == ',' || c == '=' || c == '{' || c == '}') out.push_back('\\');
    out.push_back(c);
  }
}

const std::string kEmpty;

}  // namespace

SeriesKey::SeriesKey(std::string name, const TagMap& tags) : name_(std::move(name)), tags_(tags.begin(), tags.end()) {
  build();
}

SeriesKey::SeriesKey(std::string name, const TagMap& tags, const std::string& server)
    : name_(std::move(name)), tags_(tags.begin(), tags.end()) {
  auto it = std::find_if(tags_.begin(), tags_.end(), [](const Tag& t) { return t.first == "server"; });
  if (it == tags_.end()) {
    tags_.emplace_back("server", server);
  } else {
    it->second = server;
  }
  build();
}

void SeriesKey::build() {
  std::sort(tags_.begin(), tags_.end());
  canonical_.clear();
  append_escaped(canonical_, name_);
  canonical_.push_back('{');
  for (std::size_t i = 0; i < tags_.size(); ++i) {
    if (i) canonical_.push_back(',');
    append_escaped(canonical_, tags_[i].first);
    canonical_.push_back('=');
    append_escaped(canonical_, tags_[i].second);
  }
  canonical_.push_back('}');
}

const std::string& SeriesKey::tag(const std::string& key) const {
  auto it = std::lower_bound(tags_.begin(), tags_.end(), key,
                             [](const Tag& t, const std::string& k) { return t.first < k; });
  return it != tags_.end() && it->first == key ? it->second : kEmpty;
}

bool SeriesKey::has_tag(const std::string& key) const {
  return std::binary_search(tags_.begin(), tags_.end(), Tag{key, ""},
                            [](const Tag& a, const Tag& b) { return a.first < b.first; });
}

}  // namespace miniops::tsstore
