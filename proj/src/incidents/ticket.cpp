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

#include "miniops/incidents/ticket.hpp"

#include <algorithm>

#include "miniops/common/error.hpp"

namespace miniops::incidents {

const char* to_string(Status s) {
  switch (s) {
    case Status::new_: return "new";
    case Status::triaged: return "triaged";
    case Status::in_progress: return "in_progress";
    case Status::resolved: return "resolved";
    case Status::closed: return "closed";
  }
  return "?";
}

Status parse_status(std::string_view name) {
  for (auto s : {Status::new_, Status::triaged, Status::in_progress, Status::resolved, Status::closed}) {
    if (name == to_string(s)) return s;
  }
  throw Error(Errc::invalid_argument, "unknown status '" + std::string(name) + "'");
}

const std::vector<Status>& successors(Status s) {
  static const std::vector<Status> table[] = {
      {Status::triaged},
      {Status::in_progress},
      {Status::resolved},
      {Status::closed, Status::in_progress},
      {},
  };
  return table[static_cast<int>(s)];
}

bool allowed(Status from, Status to) {
  const auto& next = successors(from);
  return std::find(next.begin(), next.end(), to) != next.end();
}

Json ticket_to_json(const Ticket& t) {
  Json comments = Json::array();
  for (const auto& c : t.comments) comments.push_back({{"ts", c.ts}, {"author", c.author}, {"text", c.text}});
  return {{"ticket_id", t.ticket_id},
          {"title", t.title},
          {"description", t.description},
          {"attributes", t.attributes},
          {"severity", to_string(t.severity)},
          {"status", to_string(t.status)},
          {"team", t.team},
          {"assignee", t.assignee ? Json(*t.assignee) : Json(nullptr)},
          {"source", {{"type", t.source.type}, {"key", t.source.key}}},
          {"comments", comments},
          {"created_at", t.created_at},
          {"revision", t.revision}};
}

Ticket ticket_from_json(const Json& j) {
  Ticket t;
  t.ticket_id = j.at("ticket_id").get<std::string>();
  t.title = j.at("title").get<std::string>();
  t.description = j.value("description", "");
  t.attributes = j.value("attributes", TagMap{});
  t.severity = severity_or_throw(j.at("severity").get<std::string>());
  t.status = parse_status(j.at("status").get<std::string>());
  t.team = j.value("team", "");
  if (j.contains("assignee") && !j["assignee"].is_null()) t.assignee = j["assignee"].get<std::string>();
  if (j.contains("source")) t.source = {j["source"].value("type", "manual"), j["source"].value("key", "")};
  for (const auto& c : j.value("comments", Json::array())) {
    t.comments.push_back({c.at("ts").get<EpochMs>(), c.at("author").get<std::string>(), c.at("text").get<std::string>()});
  }
  t.created_at = j.value("created_at", EpochMs{0});
  t.revision = j.value("revision", std::uint64_t{0});
  return t;
}

namespace {
constexpr std::string_view kAudit = "status: ";
constexpr std::string_view kArrow = "→";
}  // namespace

std::string audit_text(Status from, Status to, const std::string& actor) {
  return std::string(kAudit) + to_string(from) + std::string(kArrow) + to_string(to) + " by " + actor;
}

Status replay_status(const std::vector<Comment>& comments) {
  Status s = Status::new_;
  for (const auto& c : comments) {
    if (c.text.rfind(kAudit, 0) != 0) continue;
    const auto arrow = c.text.find(kArrow);
    const auto by = c.text.find(" by ", arrow);
    if (arrow == std::string::npos || by == std::string::npos) continue;
    const auto from = parse_status(c.text.substr(kAudit.size(), arrow - kAudit.size()));
    const auto to = parse_status(c.text.substr(arrow + kArrow.size(), by - arrow - kArrow.size()));
    if (from != s || !allowed(from, to)) throw Error(Errc::corrupt, "audit trail breaks at '" + c.text + "'");
    s = to;
  }
  return s;
}

void validate_rules(const std::vector<TriageRule>& rules) {
  std::size_t defaults = 0;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    if (rules[i].team.empty()) throw Error(Errc::invalid_argument, "triage rule " + std::to_string(i) + " has no team");
    if (rules[i].when.empty()) {
      ++defaults;
      if (i + 1 != rules.size()) throw Error(Errc::invalid_argument, "the default triage rule must come last");
    }
    for (const auto& c : rules[i].when) {
      if (c.field.empty() || c.values.empty()) {
        throw Error(Errc::invalid_argument, "triage rule " + std::to_string(i) + " has an empty condition");
      }
    }
  }
  if (defaults != 1) throw Error(Errc::invalid_argument, "exactly one default triage rule is required");
}

bool matches(const TriageRule& rule, const Ticket& t) {
  for (const auto& c : rule.when) {
    std::string v;
    if (c.field == "severity") {
      v = to_string(t.severity);
    } else if (auto it = t.attributes.find(c.field); it != t.attributes.end()) {
      v = it->second;
    } else {
      return false;
    }
    if (std::find(c.values.begin(), c.values.end(), v) == c.values.end()) return false;
  }
  return true;
}

std::size_t first_match(const std::vector<TriageRule>& rules, const Ticket& t) {
  for (std::size_t i = 0; i < rules.size(); ++i) {
    if (matches(rules[i], t)) return i;
  }
  throw Error(Errc::invalid_argument, "no triage rule matched; a default rule is required");
}

std::string triage(const std::vector<TriageRule>& rules, const Ticket& t, const Classifier& classifier) {
  const auto& rule = rules[first_match(rules, t)];
  if (rule.defer_to_classifier && classifier) {
    if (auto team = classifier(t); team && !team->empty()) return *team;
  }
  return rule.team;
}

Json rules_to_json(const std::vector<TriageRule>& rules) {
  Json out = Json::array();
  for (const auto& r : rules) {
    Json when = Json::array();
    for (const auto& c : r.when) when.push_back({{"field", c.field}, {"values", c.values}});
    out.push_back({{"when", when}, {"team", r.team}, {"defer_to_classifier", r.defer_to_classifier}});
  }
  return out;
}

std::vector<TriageRule> rules_from_json(const Json& j) {
  const Json& list = j.is_object() ? j.at("rules") : j;
  if (!list.is_array()) throw Error(Errc::invalid_argument, "triage rules must be an array");
  std::vector<TriageRule> rules;
  try {
    for (const auto& r : list) {
      TriageRule rule;
      rule.team = r.at("team").get<std::string>();
      rule.defer_to_classifier = r.value("defer_to_classifier", false);
      for (const auto& c : r.value("when", Json::array())) {
        Condition cond{c.at("field").get<std::string>(), {}};
        if (c.contains("values")) cond.values = c["values"].get<std::vector<std::string>>();
        else cond.values = {c.at("value").get<std::string>()};
        rule.when.push_back(cond);
      }
      rules.push_back(rule);
    }
  } catch (const Json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("bad triage rule: ") + e.what());
  }
  validate_rules(rules);
  return rules;
}

bool rank_before(const Ticket& a, const Ticket& b) {
  if (a.severity != b.severity) return a.severity > b.severity;
  if (a.created_at != b.created_at) return a.created_at < b.created_at;
  return a.ticket_id < b.ticket_id;
}

std::vector<Ticket> rank(std::vector<Ticket> tickets) {
  std::stable_sort(tickets.begin(), tickets.end(), rank_before);
  return tickets;
}

}  // namespace miniops::incidents
