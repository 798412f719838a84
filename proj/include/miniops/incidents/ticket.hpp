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

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "miniops/common/clock.hpp"
#include "miniops/common/json.hpp"
#include "miniops/common/record.hpp"
#include "miniops/common/severity.hpp"

namespace miniops::incidents {

enum class Status { new_, triaged, in_progress, resolved, closed };

const char* to_string(Status s);
Status parse_status(std::string_view name);

// new→triaged→in_progress→resolved→closed, plus resolved→in_progress.
const std::vector<Status>& successors(Status s);
bool allowed(Status from, Status to);

inline const std::vector<std::string> kRequiredAttributes = {"server", "application", "client", "occurred_at"};

struct Comment {
  EpochMs ts = 0;
  std::string author;
  std::string text;

  friend bool operator==(const Comment&, const Comment&) = default;
};

struct Source {
  std::string type = "manual";  // manual | alert
  std::string key;              // alert instance source key

  friend bool operator==(const Source&, const Source&) = default;
};

struct Ticket {
  std::string ticket_id;
  std::string title;
  std::string description;
  TagMap attributes;
  Severity severity = Severity::minor;
  Status status = Status::new_;
  std::string team;
  std::optional<std::string> assignee;
  Source source;
  std::vector<Comment> comments;
  EpochMs created_at = 0;
  std::uint64_t revision = 0;

  bool open() const { return status != Status::resolved && status != Status::closed; }

  friend bool operator==(const Ticket&, const Ticket&) = default;
};

Json ticket_to_json(const Ticket& t);
Ticket ticket_from_json(const Json& j);

// "status: X→Y by actor"
std::string audit_text(Status from, Status to, const std::string& actor);

// Final status implied by the audit comments, starting from new.
Status replay_status(const std::vector<Comment>& comments);

// --- triage ----------------------------------------------------------------

// Matches when the ticket's field takes one of the values. Fields are attribute
// keys, or "severity" for the severity name.
struct Condition {
  std::string field;
  std::vector<std::string> values;

  friend bool operator==(const Condition&, const Condition&) = default;
};

struct TriageRule {
  std::vector<Condition> when;  // empty: the default rule
  std::string team;
  // When set and a classifier is installed, its suggestion wins over team.
  bool defer_to_classifier = false;

  friend bool operator==(const TriageRule&, const TriageRule&) = default;
};

using Classifier = std::function<std::optional<std::string>(const Ticket&)>;

// Exactly one default rule, and it comes last. Error(invalid_argument).
void validate_rules(const std::vector<TriageRule>& rules);
bool matches(const TriageRule& rule, const Ticket& t);

// Index of the first matching rule; the default guarantees one.
std::size_t first_match(const std::vector<TriageRule>& rules, const Ticket& t);
std::string triage(const std::vector<TriageRule>& rules, const Ticket& t, const Classifier& classifier = {});

Json rules_to_json(const std::vector<TriageRule>& rules);
std::vector<TriageRule> rules_from_json(const Json& j);  // validates

// Severity descending, then created_at ascending, then ticket_id.
bool rank_before(const Ticket& a, const Ticket& b);
std::vector<Ticket> rank(std::vector<Ticket> tickets);

}  // namespace miniops::incidents
