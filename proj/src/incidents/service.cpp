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

#include "miniops/incidents/service.hpp"

#include <algorithm>
#include <cstdio>

#include "miniops/common/error.hpp"

namespace miniops::incidents {

namespace {
constexpr const char* kTickets = "tickets";
constexpr const char* kSources = "ticket_sources";
constexpr const char* kConfig = "incident_config";
constexpr const char* kResolvedNote = "source alert resolved at ";

std::string format_id(std::uint64_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "INC-%06llu", static_cast<unsigned long long>(n));
  return buf;
}

std::vector<TriageRule> default_rules() { return {TriageRule{{}, "ops", false}}; }

}  // namespace

IncidentService::IncidentService(tsstore::MetadataStore& meta, const Clock& clock, Classifier classifier)
    : meta_(meta), clock_(clock), classifier_(std::move(classifier)) {
  auto stored = meta_.get(kConfig, "triage_rules");
  rules_ = stored ? rules_from_json(*stored) : default_rules();
  next_id_ = meta_.list(kTickets).size() + 1;
}

void IncidentService::set_triage_rules(const std::vector<TriageRule>& rules) {
  validate_rules(rules);
  std::unique_lock lock(config_mu_);
  meta_.put(kConfig, "triage_rules", rules_to_json(rules));
  rules_ = rules;
}

std::vector<TriageRule> IncidentService::triage_rules() const {
  std::shared_lock lock(config_mu_);
  return rules_;
}

void IncidentService::set_classifier(Classifier classifier) {
  std::unique_lock lock(config_mu_);
  classifier_ = std::move(classifier);
}

void IncidentService::append_comment(Ticket& t, const std::string& author, const std::string& text) {
  EpochMs ts = clock_.now_ms();
  if (!t.comments.empty()) ts = std::max(ts, t.comments.back().ts);
  t.comments.push_back({ts, author, text});
}

Ticket IncidentService::create_ticket(const CreateRequest& req) {
  if (req.title.empty()) throw Error(Errc::invalid_argument, "title is required");
  std::string missing;
  for (const auto& k : kRequiredAttributes) {
    auto it = req.attributes.find(k);
    if (it == req.attributes.end() || it->second.empty()) missing += (missing.empty() ? "" : ", ") + k;
  }
  if (!missing.empty()) throw Error(Errc::invalid_argument, "missing required attributes: " + missing);
  const bool from_alert = req.source.type == "alert";
  if (from_alert && req.source.key.empty()) throw Error(Errc::invalid_argument, "alert source needs a key");
  if (!from_alert && req.source.type != "manual") {
    throw Error(Errc::invalid_argument, "unknown source type '" + req.source.type + "'");
  }

  std::lock_guard lock(create_mu_);
  if (from_alert) {
    if (auto id = meta_.get(kSources, req.source.key)) return get(id->get<std::string>());
  }
  Ticket t;
  t.ticket_id = format_id(next_id_++);
  t.title = req.title;
  t.description = req.description;
  t.attributes = req.attributes;
  t.severity = req.severity;
  t.source = req.source;
  t.created_at = clock_.now_ms();
  {
    std::shared_lock cfg(config_mu_);
    const auto idx = first_match(rules_, t);
    t.team = triage(rules_, t, classifier_);
    if (idx + 1 == rules_.size() && !req.team_hint.empty() && !rules_[idx].defer_to_classifier) t.team = req.team_hint;
  }
  append_comment(t, "triage", audit_text(Status::new_, Status::triaged, "triage"));
  t.status = Status::triaged;
  t.revision = 1;
  meta_.put(kTickets, t.ticket_id, ticket_to_json(t));
  if (from_alert) meta_.put(kSources, req.source.key, t.ticket_id);
  return t;
}

Ticket IncidentService::get(const std::string& ticket_id) const {
  auto j = meta_.get(kTickets, ticket_id);
  if (!j) throw Error(Errc::not_found, "unknown ticket '" + ticket_id + "'");
  return ticket_from_json(*j);
}

std::vector<Ticket> IncidentService::list(const TicketFilter& f) const {
  std::vector<Ticket> out;
  for (const auto& [_, j] : meta_.list(kTickets)) {
    Ticket t = ticket_from_json(j);
    if (f.team && t.team != *f.team) continue;
    if (f.status && t.status != *f.status) continue;
    if (f.text && t.title.find(*f.text) == std::string::npos && t.description.find(*f.text) == std::string::npos) {
      continue;
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Ticket> IncidentService::queue(const std::string& team) const {
  std::vector<Ticket> open;
  for (auto& t : list({team, std::nullopt, std::nullopt})) {
    if (t.open()) open.push_back(std::move(t));
  }
  return rank(std::move(open));
}

std::shared_ptr<std::mutex> IncidentService::lock_for(const std::string& ticket_id) {
  std::lock_guard lock(locks_mu_);
  auto& m = locks_[ticket_id];
  if (!m) m = std::make_shared<std::mutex>();
  return m;
}

template <class F>
Ticket IncidentService::mutate(const std::string& ticket_id, std::optional<std::uint64_t> expected_revision, F&& f) {
  auto m = lock_for(ticket_id);
  std::lock_guard lock(*m);
  Ticket t = get(ticket_id);
  if (expected_revision && *expected_revision != t.revision) {
    throw Error(Errc::conflict, "ticket " + ticket_id + " is at revision " + std::to_string(t.revision) +
                                    ", not " + std::to_string(*expected_revision));
  }
  if (!f(t)) return t;
  ++t.revision;
  meta_.put(kTickets, t.ticket_id, ticket_to_json(t));
  return t;
}

Ticket IncidentService::transition(const std::string& ticket_id, Status to, const std::string& actor,
                                   std::optional<std::uint64_t> expected_revision) {
  if (actor.empty()) throw Error(Errc::invalid_argument, "actor is required");
  return mutate(ticket_id, expected_revision, [&](Ticket& t) {
    if (!allowed(t.status, to)) {
      std::string next;
      for (auto s : successors(t.status)) next += (next.empty() ? "" : ", ") + std::string(to_string(s));
      throw Error(Errc::conflict, std::string("cannot move ") + to_string(t.status) + " to " + to_string(to) +
                                      "; allowed: " + (next.empty() ? "none" : next));
    }
    append_comment(t, actor, audit_text(t.status, to, actor));
    t.status = to;
    return true;
  });
}

Ticket IncidentService::add_comment(const std::string& ticket_id, const std::string& author, const std::string& text,
                                    std::optional<std::uint64_t> expected_revision) {
  if (author.empty() || text.empty()) throw Error(Errc::invalid_argument, "comment needs an author and text");
  return mutate(ticket_id, expected_revision, [&](Ticket& t) {
    if (t.status == Status::closed) throw Error(Errc::conflict, "ticket " + ticket_id + " is closed");
    append_comment(t, author, text);
    return true;
  });
}

Ticket IncidentService::assign(const std::string& ticket_id, const std::string& assignee,
                               std::optional<std::uint64_t> expected_revision) {
  return mutate(ticket_id, expected_revision, [&](Ticket& t) {
    if (t.status == Status::closed) throw Error(Errc::conflict, "ticket " + ticket_id + " is closed");
    t.assignee = assignee.empty() ? std::nullopt : std::optional(assignee);
    return true;
  });
}

std::optional<std::string> IncidentService::ticket_for_source(const std::string& source_key) const {
  auto id = meta_.get(kSources, source_key);
  if (!id) return std::nullopt;
  return id->get<std::string>();
}

bool IncidentService::link_alert_resolution(const std::string& source_key, EpochMs at) {
  const auto id = ticket_for_source(source_key);
  if (!id) return false;
  bool appended = false;
  mutate(*id, std::nullopt, [&](Ticket& t) {
    if (t.status == Status::closed) return false;
    for (const auto& c : t.comments) {
      if (c.author == "alerting" && c.text.rfind(kResolvedNote, 0) == 0) return false;
    }
    append_comment(t, "alerting", kResolvedNote + std::to_string(at));
    appended = true;
    return true;
  });
  return appended;
}

std::string TicketActionSink::create_incident(const alerting::IncidentRequest& req) {
  CreateRequest c;
  c.title = req.title;
  c.description = req.description;
  c.attributes = req.attributes;
  c.severity = req.severity;
  c.source = {"alert", req.source_key};
  c.team_hint = req.team_hint;
  return service_.create_ticket(c).ticket_id;
}

void TicketActionSink::alert_resolved(const std::string& source_key, EpochMs at) {
  service_.link_alert_resolution(source_key, at);
}

}  // namespace miniops::incidents
