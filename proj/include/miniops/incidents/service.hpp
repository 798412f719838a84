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

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "miniops/alerting/engine.hpp"
#include "miniops/incidents/ticket.hpp"
#include "miniops/tsstore/metadata_store.hpp"

namespace miniops::incidents {

struct CreateRequest {
  std::string title;
  std::string description;
  TagMap attributes;
  Severity severity = Severity::minor;
  Source source;
  // Used instead of the default rule's team when no specific rule matches.
  std::string team_hint;
};

struct TicketFilter {
  std::optional<std::string> team;
  std::optional<Status> status;
  std::optional<std::string> text;  // substring of title or description
};

/// Ticket store and workflow. Tickets live in the metadata store namespace
/// "tickets"; every mutation bumps the ticket's revision, and callers may pass
/// the revision they read to get Errc::conflict on a lost update.
class IncidentService {
 public:
  IncidentService(tsstore::MetadataStore& meta, const Clock& clock = system_clock(), Classifier classifier = {});

  // New tickets are triaged on creation. An alert-sourced request whose key
  // already has a ticket returns that ticket unchanged.
  Ticket create_ticket(const CreateRequest& req);

  Ticket get(const std::string& ticket_id) const;
  std::vector<Ticket> list(const TicketFilter& filter = {}) const;
  // Open tickets of the team in rank order.
  std::vector<Ticket> queue(const std::string& team) const;

  Ticket transition(const std::string& ticket_id, Status to, const std::string& actor,
                    std::optional<std::uint64_t> expected_revision = std::nullopt);
  Ticket add_comment(const std::string& ticket_id, const std::string& author, const std::string& text,
                     std::optional<std::uint64_t> expected_revision = std::nullopt);
  Ticket assign(const std::string& ticket_id, const std::string& assignee,
                std::optional<std::uint64_t> expected_revision = std::nullopt);

  // Notes on the alert's ticket that its source alert resolved. Once per key;
  // false when there is no open ticket or the note already exists.
  bool link_alert_resolution(const std::string& source_key, EpochMs at);
  std::optional<std::string> ticket_for_source(const std::string& source_key) const;

  void set_triage_rules(const std::vector<TriageRule>& rules);
  std::vector<TriageRule> triage_rules() const;
  void set_classifier(Classifier classifier);

 private:
  template <class F>
  Ticket mutate(const std::string& ticket_id, std::optional<std::uint64_t> expected_revision, F&& f);
  std::shared_ptr<std::mutex> lock_for(const std::string& ticket_id);
  void append_comment(Ticket& t, const std::string& author, const std::string& text);

  tsstore::MetadataStore& meta_;
  const Clock& clock_;

  mutable std::shared_mutex config_mu_;
  std::vector<TriageRule> rules_;
  Classifier classifier_;

  std::mutex create_mu_;
  std::uint64_t next_id_ = 1;

  std::mutex locks_mu_;
  std::map<std::string, std::shared_ptr<std::mutex>> locks_;
};

// In-process bridge from the alert dispatcher to the ticket service.
class TicketActionSink final : public alerting::ActionSink {
 public:
  explicit TicketActionSink(IncidentService& service) : service_(service) {}
  std::string create_incident(const alerting::IncidentRequest& req) override;
  void alert_resolved(const std::string& source_key, EpochMs at) override;

 private:
  IncidentService& service_;
};

}  // namespace miniops::incidents
