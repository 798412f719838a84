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

#include "miniops/common/severity.hpp"

#include "miniops/common/error.hpp"

namespace miniops {

const char* to_string(Severity s) {
  switch (s) {
    case Severity::info: return "info";
    case Severity::minor: return "minor";
    case Severity::major: return "major";
    case Severity::critical: return "critical";
  }
  return "?";
}

std::optional<Severity> parse_severity(std::string_view name) {
  for (auto s : {Severity::info, Severity::minor, Severity::major, Severity::critical}) {
    if (name == to_string(s)) return s;
  }
  return std::nullopt;
}

Severity severity_or_throw(std::string_view name) {
  auto s = parse_severity(name);
  if (!s) throw Error(Errc::invalid_argument, "unknown severity '" + std::string(name) + "'");
  return *s;
}

}  // namespace miniops
