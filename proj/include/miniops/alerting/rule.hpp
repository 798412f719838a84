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

#include <optional>
#include <string>
#include <vector>

#include "miniops/common/clock.hpp"
#include "miniops/common/json.hpp"
#include "miniops/common/record.hpp"
#include "miniops/common/severity.hpp"
#include "miniops/tsstore/query.hpp"

namespace miniops::alerting {

enum class Comparator { gt, ge, lt, le };

const char* to_string(Comparator c);
Comparator parse_comparator(std::string_view text);  // ">", ">=", "<", "<="
bool compare(Comparator c, double value, double threshold);

enum class ActionType { create_incident, log_only };

struct ActionSpec {
  ActionType type = ActionType::log_only;
  std::string team_hint;
  // {server}, {metric} and {value} are substituted at fire time.
  std::string title;

  friend bool operator==(const ActionSpec&, const ActionSpec&) = default;
};

// Turns the source into a per-series saturation forecast; the comparator then
// applies to days_to_saturation.
struct ForecastSpec {
  double capacity_bound = 0.0;
  EpochMs window_ms = 14 * kMsPerDay;

  friend bool operator==(const ForecastSpec&, const ForecastSpec&) = default;
};

struct AlertRule {
  std::string rule_id;
  std::string source;  // mini-SQL
  Comparator comparator = Comparator::gt;
  double threshold = 0.0;
  Severity severity = Severity::major;
  std::int64_t for_duration_s = 0;
  std::int64_t eval_every_s = 60;
  std::vector<ActionSpec> actions;
  bool enabled = true;
  // Threshold rules read only points newer than now - lookback.
  std::int64_t lookback_s = 300;
  std::optional<ForecastSpec> forecast;

  friend bool operator==(const AlertRule&, const AlertRule&) = default;
};

// Parses the source and checks every field; throws Error(invalid_argument).
tsstore::Query validate(const AlertRule& rule);

Json rule_to_json(const AlertRule& r);
AlertRule rule_from_json(const Json& j);  // validates

// Group tags are the source's group-by keys with the row's values.
std::string render_title(const std::string& templ, const TagMap& group, const std::string& metric, double value);

}  // namespace miniops::alerting
