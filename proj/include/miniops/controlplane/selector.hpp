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
#include <vector>

#include "miniops/common/clock.hpp"
#include "miniops/common/json.hpp"
#include "miniops/common/record.hpp"

namespace miniops::controlplane {

struct ServerDescriptor {
  std::string server_id;
  std::string client_name;
  std::string role;
  TagMap tags;
  EpochMs last_seen = 0;

  friend bool operator==(const ServerDescriptor&, const ServerDescriptor&) = default;
};

Json descriptor_to_json(const ServerDescriptor& d);
ServerDescriptor descriptor_from_json(const Json& j);  // throws Error(invalid_argument)

enum class Op { eq, neq, in };

struct Predicate {
  std::string field;  // server_id, client_name (alias client), role, or tags.<key>
  Op op = Op::eq;
  std::vector<std::string> values;  // exactly one for eq and neq

  friend bool operator==(const Predicate&, const Predicate&) = default;
};

/// Conjunction of predicates; empty matches every server.
struct TargetSelector {
  std::vector<Predicate> predicates;

  friend bool operator==(const TargetSelector&, const TargetSelector&) = default;
};

// Throws Error(invalid_argument) for an unknown field or a bad value count.
void validate(const TargetSelector& s);
bool matches(const TargetSelector& s, const ServerDescriptor& d);

// [{"field", "op", "value"}]; value is a string, or an array for "in". {} and [] are empty.
Json selector_to_json(const TargetSelector& s);
TargetSelector selector_from_json(const Json& j);

// Comma-separated "field=value", "field!=value" or "field=v1|v2" (membership).
TargetSelector parse_selector(const std::string& text);

}  // namespace miniops::controlplane
