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

#include "miniops/alerting/rule.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "miniops/common/error.hpp"
#include "miniops/tsstore/sql.hpp"

namespace miniops::alerting {

const char* to_string(Comparator c) {
  switch (c) {
    case Comparator::gt: return ">";
    case Comparator::ge: return ">=";
    case Comparator::lt: return "<";
    case Comparator::le: return "<=";
  }
  return "?";
}

Comparator parse_comparator(std::string_view text) {
  for (auto c : {Comparator::gt, Comparator::ge, Comparator::lt, Comparator::le}) {
    if (text == to_string(c)) return c;
  }
  throw Error(Errc::invalid_argument, "unknown comparator '" + std::string(text) + "'");
}

bool compare(Comparator c, double value, double threshold) {
  switch (c) {
    case Comparator::gt: return value > threshold;
    case Comparator::ge: return value >= threshold;
    case Comparator::lt: return value < threshold;
    case Comparator::le: return value <= threshold;
  }
  return false;
}

namespace {

const char* action_name(ActionType t) { return t == ActionType::create_incident ? "create_incident" : "log_only"; }

// Every {name} in the template must be one we can fill from this query.
void check_placeholders(const std::string& templ, const tsstore::Query& q) {
  for (std::size_t i = templ.find('{'); i != std::string::npos; i = templ.find('{', i + 1)) {
    const auto end = templ.find('}', i);
    if (end == std::string::npos) throw Error(Errc::invalid_argument, "unterminated placeholder in title");
    const std::string name = templ.substr(i + 1, end - i - 1);
    if (name == "metric" || name == "value") continue;
    if (name == "server") {
      if (std::find(q.group_by.begin(), q.group_by.end(), "server") == q.group_by.end()) {
        throw Error(Errc::invalid_argument, "title uses {server} but the source does not group by server");
      }
      continue;
    }
    throw Error(Errc::invalid_argument, "unknown placeholder {" + name + "}");
  }
}

}  // namespace

tsstore::Query validate(const AlertRule& rule) {
  if (rule.rule_id.empty()) throw Error(Errc::invalid_argument, "rule_id is required");
  if (rule.eval_every_s < 1) throw Error(Errc::invalid_argument, "eval_every_s must be >= 1");
  if (rule.for_duration_s < 0) throw Error(Errc::invalid_argument, "for_duration_s must be >= 0");
  if (rule.lookback_s < 1) throw Error(Errc::invalid_argument, "lookback_s must be >= 1");
  if (!std::isfinite(rule.threshold)) throw Error(Errc::invalid_argument, "threshold must be finite");
  tsstore::Query q;
  try {
    q = tsstore::parse_query(rule.source);
  } catch (const tsstore::SqlError& e) {
    throw Error(Errc::invalid_argument, std::string("source: ") + e.what());
  }
  if (rule.forecast) {
    if (!std::isfinite(rule.forecast->capacity_bound)) throw Error(Errc::invalid_argument, "capacity_bound must be finite");
    if (rule.forecast->window_ms <= 0) throw Error(Errc::invalid_argument, "forecast window must be positive");
  } else if (q.bucket_ms && q.aggregate != tsstore::Aggregate::last) {
    throw Error(Errc::invalid_argument, "a threshold source must use last() or a single bucket");
  }
  for (const auto& a : rule.actions) {
    if (a.type == ActionType::create_incident && a.title.empty()) {
      throw Error(Errc::invalid_argument, "create_incident needs a title");
    }
    check_placeholders(a.title, q);
  }
  return q;
}

Json rule_to_json(const AlertRule& r) {
  Json actions = Json::array();
  for (const auto& a : r.actions) {
    actions.push_back({{"type", action_name(a.type)}, {"team_hint", a.team_hint}, {"title", a.title}});
  }
  Json j{{"rule_id", r.rule_id},
         {"source", r.source},
         {"comparator", to_string(r.comparator)},
         {"threshold", r.threshold},
         {"severity", to_string(r.severity)},
         {"for_duration_s", r.for_duration_s},
         {"eval_every_s", r.eval_every_s},
         {"actions", actions},
         {"enabled", r.enabled},
         {"lookback_s", r.lookback_s}};
  if (r.forecast) {
    j["forecast"] = {{"capacity_bound", r.forecast->capacity_bound}, {"window_s", r.forecast->window_ms / kMsPerSecond}};
  }
  return j;
}

AlertRule rule_from_json(const Json& j) {
  if (!j.is_object()) throw Error(Errc::invalid_argument, "rule must be an object");
  AlertRule r;
  try {
    r.rule_id = j.at("rule_id").get<std::string>();
    r.source = j.at("source").get<std::string>();
    r.comparator = parse_comparator(j.at("comparator").get<std::string>());
    r.threshold = j.at("threshold").get<double>();
    r.severity = severity_or_throw(j.value("severity", std::string("major")));
    r.for_duration_s = j.value("for_duration_s", std::int64_t{0});
    r.eval_every_s = j.value("eval_every_s", std::int64_t{60});
    r.enabled = j.value("enabled", true);
    r.lookback_s = j.value("lookback_s", std::int64_t{300});
    for (const auto& a : j.value("actions", Json::array())) {
      ActionSpec spec;
      const auto type = a.at("type").get<std::string>();
      if (type == "create_incident") spec.type = ActionType::create_incident;
      else if (type == "log_only") spec.type = ActionType::log_only;
      else throw Error(Errc::invalid_argument, "unknown action type '" + type + "'");
      spec.team_hint = a.value("team_hint", "");
      spec.title = a.value("title", "");
      r.actions.push_back(spec);
    }
    if (j.contains("forecast") && !j["forecast"].is_null()) {
      const auto& f = j["forecast"];
      ForecastSpec spec;
      spec.capacity_bound = f.at("capacity_bound").get<double>();
      spec.window_ms = f.value("window_s", std::int64_t{14 * 86400}) * kMsPerSecond;
      r.forecast = spec;
    }
  } catch (const Json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("bad rule: ") + e.what());
  }
  validate(r);
  return r;
}

std::string render_title(const std::string& templ, const TagMap& group, const std::string& metric, double value) {
  char num[32];
  std::snprintf(num, sizeof num, "%g", value);
  std::string out;
  for (std::size_t i = 0; i < templ.size();) {
    if (templ[i] == '{') {
      const auto end = templ.find('}', i);
      const std::string name = templ.substr(i + 1, end - i - 1);
      if (name == "metric") out += metric;
      else if (name == "value") out += num;
      else if (auto it = group.find(name); it != group.end()) out += it->second;
      i = end + 1;
    } else {
      out += templ[i++];
    }
  }
  return out;
}

}  // namespace miniops::alerting
