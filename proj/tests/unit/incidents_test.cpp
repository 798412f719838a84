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

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <thread>
#include <tuple>

#include "miniops/common/error.hpp"
#include "miniops/common/http.hpp"
#include "miniops/common/rng.hpp"
#include "miniops/incidents/http_service.hpp"
#include "miniops/incidents/service.hpp"
#include "support/temp_dir.hpp"

namespace miniops::incidents {
namespace {

using miniops::testing::TempDir;

const std::vector<Status> kAll = {Status::new_, Status::triaged, Status::in_progress, Status::resolved, Status::closed};

TagMap attrs(const std::string& app = "erp", const std::string& server = "s1") {
  return {{"server", server}, {"application", app}, {"client", "acme"}, {"occurred_at", "1000"}};
}

CreateRequest manual(const std::string& title, Severity sev = Severity::minor, TagMap a = attrs()) {
  CreateRequest r;
  r.title = title;
  r.attributes = std::move(a);
  r.severity = sev;
  return r;
}

struct Fixture {
  ManualClock clock{1'000};
  tsstore::MetadataStore meta;
  IncidentService svc{meta, clock};
};

TEST(Tickets, RequiredAttributesNamed) {
  Fixture f;
  auto a = attrs();
  a.erase("client");
  try {
    f.svc.create_ticket(manual("disk", Severity::major, a));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_argument);
    EXPECT_NE(std::string(e.what()).find("client"), std::string::npos);
  }
  a.erase("server");
  try {
    f.svc.create_ticket(manual("disk", Severity::major, a));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("server, client"), std::string::npos);
  }
}

TEST(Tickets, CreatedTriagedWithAuditComment) {
  Fixture f;
  const auto t = f.svc.create_ticket(manual("disk full"));
  EXPECT_EQ(t.ticket_id, "INC-000001");
  EXPECT_EQ(t.status, Status::triaged);
  EXPECT_EQ(t.team, "ops");
  ASSERT_EQ(t.comments.size(), 1u);
  EXPECT_EQ(t.comments[0].text, "status: new→triaged by triage");
  EXPECT_EQ(f.svc.get(t.ticket_id), t);
  EXPECT_THROW(f.svc.get("INC-999999"), Error);
}

TEST(Tickets, AlertSourcedCreationIsIdempotent) {
  Fixture f;
  auto r = manual("cpu");
  r.source = {"alert", "cpu-high|server=s1|60000"};
  const auto a = f.svc.create_ticket(r);
  f.clock.advance(5000);
  const auto b = f.svc.create_ticket(r);
  EXPECT_EQ(a, b);
  EXPECT_EQ(f.svc.list().size(), 1u);
  r.source.key = "cpu-high|server=s2|60000";
  EXPECT_NE(f.svc.create_ticket(r).ticket_id, a.ticket_id);
}

TEST(Tickets, ConcurrentAlertCreationYieldsOneTicketPerKey) {
  Fixture f;
  std::vector<std::thread> threads;
  for (int w = 0; w < 8; ++w) {
    threads.emplace_back([&] {
      for (int k = 0; k < 20; ++k) {
        auto r = manual("cpu");
        r.source = {"alert", "key-" + std::to_string(k)};
        f.svc.create_ticket(r);
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(f.svc.list().size(), 20u);
}

TEST(Triage, Examples) {
  Fixture f;
  f.svc.set_triage_rules({{{{"application", {"oracle"}}}, "DB"}, {{}, "ops"}});
  EXPECT_EQ(f.svc.create_ticket(manual("ts full", Severity::major, attrs("oracle"))).team, "DB");
  EXPECT_EQ(f.svc.create_ticket(manual("slow", Severity::major, attrs("erp"))).team, "ops");
  const std::vector<TriageRule> both = {{{{"server", {"s1"}}}, "infra"}, {{{"application", {"oracle"}}}, "DB"}, {{}, "ops"}};
  Ticket t;
  t.attributes = attrs("oracle", "s1");
  EXPECT_EQ(triage(both, t), "infra");
  EXPECT_EQ(first_match(both, t), 0u);
}

TEST(Triage, RuleSetValidation) {
  EXPECT_THROW(validate_rules({}), Error);
  EXPECT_THROW(validate_rules({{{{"server", {"s1"}}}, "a"}}), Error);
  EXPECT_THROW(validate_rules({{{}, "a"}, {{{"server", {"s1"}}}, "b"}}), Error);
  EXPECT_THROW(validate_rules({{{}, "a"}, {{}, "b"}}), Error);
  EXPECT_THROW(validate_rules({{{}, ""}}), Error);
  const std::vector<TriageRule> ok = {{{{"severity", {"critical", "major"}}}, "oncall", true}, {{}, "ops"}};
  EXPECT_NO_THROW(validate_rules(ok));
  EXPECT_EQ(rules_from_json(rules_to_json(ok)), ok);
}

TEST(Triage, ClassifierAndTeamHint) {
  Fixture f;
  f.svc.set_triage_rules({{{{"application", {"erp"}}}, "app", true}, {{}, "ops"}});
  f.svc.set_classifier([](const Ticket& t) -> std::optional<std::string> {
    if (t.title.find("lock") != std::string::npos) return "DB";
    return std::nullopt;
  });
  EXPECT_EQ(f.svc.create_ticket(manual("row lock wait")).team, "DB");
  EXPECT_EQ(f.svc.create_ticket(manual("slow screen")).team, "app");
  auto hinted = manual("fan", Severity::minor, attrs("bios"));
  hinted.team_hint = "infra";
  EXPECT_EQ(f.svc.create_ticket(hinted).team, "infra");
  hinted.attributes = attrs("erp");
  EXPECT_EQ(f.svc.create_ticket(hinted).team, "app");  // a specific rule beats the hint
}

// Independent scan for the first rule whose every condition holds.
std::string triage_oracle(const std::vector<TriageRule>& rules, const Ticket& t) {
  for (const auto& r : rules) {
    bool all = true;
    for (const auto& c : r.when) {
      const std::string v = c.field == "severity" ? to_string(t.severity)
                            : t.attributes.count(c.field) ? t.attributes.at(c.field)
                                                          : "\x01" "absent";
      all = all && std::count(c.values.begin(), c.values.end(), v) > 0;
    }
    if (all) return r.team;
  }
  return "";
}

TEST(Triage, RandomTicketsMatchFirstMatchOracle) {
  Rng rng(89);
  const std::vector<std::string> apps = {"oracle", "erp", "web", "batch"}, servers = {"s1", "s2", "s3"},
                                  clients = {"acme", "globex"}, sevs = {"info", "minor", "major", "critical"};
  std::vector<TriageRule> rules;
  for (int i = 0; i < 9; ++i) {
    TriageRule r;
    r.team = "team" + std::to_string(i);
    for (int c = 0, n = static_cast<int>(rng.uniform_int(1, 2)); c < n; ++c) {
      const int which = static_cast<int>(rng.uniform_int(0, 3));
      const auto& pool = which == 0 ? apps : which == 1 ? servers : which == 2 ? clients : sevs;
      const char* field = which == 0 ? "application" : which == 1 ? "server" : which == 2 ? "client" : "severity";
      r.when.push_back({field, {pool[rng.uniform_int(0, pool.size() - 1)]}});
    }
    rules.push_back(r);
  }
  rules.push_back({{}, "default"});
  Fixture f;
  f.svc.set_triage_rules(rules);
  for (int i = 0; i < 1000; ++i) {
    auto r = manual("t" + std::to_string(i), static_cast<Severity>(rng.uniform_int(0, 3)),
                    {{"server", servers[rng.uniform_int(0, 2)]}, {"application", apps[rng.uniform_int(0, 3)]},
                     {"client", clients[rng.uniform_int(0, 1)]}, {"occurred_at", "0"}});
    Ticket probe;
    probe.attributes = r.attributes;
    probe.severity = r.severity;
    EXPECT_EQ(f.svc.create_ticket(r).team, triage_oracle(rules, probe));
  }
}

bool rank_oracle(const Ticket& a, const Ticket& b) {
  return std::make_tuple(-static_cast<int>(a.severity), a.created_at, a.ticket_id) <
         std::make_tuple(-static_cast<int>(b.severity), b.created_at, b.ticket_id);
}

TEST(Rank, Examples) {
  Fixture f;
  f.clock.set(1000);
  const auto minor_old = f.svc.create_ticket(manual("old", Severity::minor));
  f.clock.set(2000);
  const auto crit_new = f.svc.create_ticket(manual("new", Severity::critical));
  f.clock.set(3000);
  const auto minor_newer = f.svc.create_ticket(manual("newer", Severity::minor));
  const auto q = f.svc.queue("ops");
  ASSERT_EQ(q.size(), 3u);
  EXPECT_EQ(q[0].ticket_id, crit_new.ticket_id);
  EXPECT_EQ(q[1].ticket_id, minor_old.ticket_id);
  EXPECT_EQ(q[2].ticket_id, minor_newer.ticket_id);
  f.svc.transition(crit_new.ticket_id, Status::in_progress, "bob");
  f.svc.transition(crit_new.ticket_id, Status::resolved, "bob");
  EXPECT_EQ(f.svc.queue("ops").size(), 2u);
}

TEST(Rank, RandomTicketsMatchComparatorOracle) {
  Rng rng(97);
  std::vector<Ticket> tickets;
  for (int i = 0; i < 100; ++i) {
    Ticket t;
    t.ticket_id = "INC-" + std::to_string(rng.uniform_int(0, 1'000'000)) + "-" + std::to_string(i);
    t.severity = static_cast<Severity>(rng.uniform_int(0, 3));
    t.created_at = rng.uniform_int(0, 20);  // plenty of ties
    tickets.push_back(t);
  }
  auto expected = tickets;
  std::sort(expected.begin(), expected.end(), rank_oracle);
  EXPECT_EQ(rank(tickets), expected);
  for (int p = 0; p < 500; ++p) {
    std::shuffle(tickets.begin(), tickets.end(), std::mt19937_64(rng.next_u64()));
    EXPECT_EQ(rank(tickets), expected);
  }
}

TEST(StatusMachine, ExhaustiveAgainstEdgeTable) {
  const std::set<std::pair<Status, Status>> edges = {{Status::new_, Status::triaged},
                                                     {Status::triaged, Status::in_progress},
                                                     {Status::in_progress, Status::resolved},
                                                     {Status::resolved, Status::closed},
                                                     {Status::resolved, Status::in_progress}};
  // Shortest way from the created (triaged) state to each later state.
  const std::map<Status, std::vector<Status>> path = {
      {Status::triaged, {}},
      {Status::in_progress, {Status::in_progress}},
      {Status::resolved, {Status::in_progress, Status::resolved}},
      {Status::closed, {Status::in_progress, Status::resolved, Status::closed}}};
  for (auto from : kAll) {
    for (auto to : kAll) {
      EXPECT_EQ(allowed(from, to), edges.count({from, to}) > 0) << to_string(from) << "->" << to_string(to);
      if (from == Status::new_) continue;  // creation triages at once
      Fixture f;
      const auto id = f.svc.create_ticket(manual("x")).ticket_id;
      for (auto s : path.at(from)) f.svc.transition(id, s, "walker");
      ASSERT_EQ(f.svc.get(id).status, from);
      if (edges.count({from, to})) {
        EXPECT_EQ(f.svc.transition(id, to, "tester").status, to);
      } else {
        try {
          f.svc.transition(id, to, "tester");
          ADD_FAILURE() << to_string(from) << "->" << to_string(to);
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), Errc::conflict);
          for (auto s : successors(from)) EXPECT_NE(std::string(e.what()).find(to_string(s)), std::string::npos);
        }
        EXPECT_EQ(f.svc.get(id).status, from);
      }
    }
  }
}

TEST(StatusMachine, FullPathLeavesFourAuditComments) {
  Fixture f;
  const auto id = f.svc.create_ticket(manual("x")).ticket_id;
  for (auto s : {Status::in_progress, Status::resolved, Status::closed}) f.svc.transition(id, s, "amy");
  const auto t = f.svc.get(id);
  ASSERT_EQ(t.comments.size(), 4u);
  EXPECT_EQ(t.comments[3].text, "status: resolved→closed by amy");
  EXPECT_EQ(replay_status(t.comments), Status::closed);
}

TEST(StatusMachine, RandomWalksReplayToFinalStatus) {
  Rng rng(101);
  for (int walk = 0; walk < 100; ++walk) {
    Fixture f;
    const auto id = f.svc.create_ticket(manual("w")).ticket_id;
    for (int step = 0, n = static_cast<int>(rng.uniform_int(1, 30)); step < n; ++step) {
      if (rng.coin(0.3)) {
        try {
          f.svc.add_comment(id, "eng", rng.coin(0.5) ? "palliative: restarted service" : "looking");
        } catch (const Error&) {
        }
        continue;
      }
      try {
        f.svc.transition(id, kAll[rng.uniform_int(0, 4)], "eng" + std::to_string(step));
      } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::conflict);
      }
    }
    const auto t = f.svc.get(id);
    EXPECT_EQ(replay_status(t.comments), t.status);
  }
}

TEST(Comments, OrderClosedAndMonotoneTimestamps) {
  Fixture f;
  const auto id = f.svc.create_ticket(manual("x")).ticket_id;
  f.clock.set(5000);
  f.svc.add_comment(id, "a", "first");
  f.clock.set(6000);
  f.svc.add_comment(id, "b", "second");
  f.clock.set(100);  // clock stepped backwards
  const auto t = f.svc.add_comment(id, "c", "third");
  EXPECT_EQ(t.comments[1].text, "first");
  EXPECT_EQ(t.comments[2].text, "second");
  EXPECT_EQ(t.comments[3].ts, 6000);
  for (auto s : {Status::in_progress, Status::resolved, Status::closed}) f.svc.transition(id, s, "amy");
  EXPECT_THROW(f.svc.add_comment(id, "a", "late"), Error);
  EXPECT_THROW(f.svc.add_comment(id, "", "anon"), Error);
}

TEST(Comments, ConcurrentCommentsAllKeptAndPrefixStable) {
  Fixture f;
  const auto id = f.svc.create_ticket(manual("x")).ticket_id;
  std::vector<std::vector<Comment>> snapshots;
  std::mutex snap_mu;
  std::vector<std::thread> threads;
  for (int w = 0; w < 5; ++w) {
    threads.emplace_back([&, w] {
      for (int i = 0; i < 10; ++i) {
        f.clock.advance(w % 2 ? 7 : -3);
        f.svc.add_comment(id, "w" + std::to_string(w), std::to_string(i));
        std::lock_guard lock(snap_mu);
        snapshots.push_back(f.svc.get(id).comments);
      }
    });
  }
  for (auto& t : threads) t.join();
  const auto final = f.svc.get(id).comments;
  EXPECT_EQ(final.size(), 51u);
  for (std::size_t i = 1; i < final.size(); ++i) EXPECT_LE(final[i - 1].ts, final[i].ts);
  for (const auto& s : snapshots) {
    ASSERT_LE(s.size(), final.size());
    EXPECT_TRUE(std::equal(s.begin(), s.end(), final.begin()));
  }
  EXPECT_EQ(f.svc.get(id).revision, 51u);
}

TEST(Concurrency, StaleRevisionIsRejected) {
  Fixture f;
  const auto t = f.svc.create_ticket(manual("x"));
  f.svc.add_comment(t.ticket_id, "a", "one", t.revision);
  try {
    f.svc.transition(t.ticket_id, Status::in_progress, "b", t.revision);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::conflict);
  }
  EXPECT_EQ(f.svc.assign(t.ticket_id, "carol", t.revision + 1).assignee, "carol");
}

TEST(AlertLink, ResolutionCommentOnce) {
  Fixture f;
  EXPECT_FALSE(f.svc.link_alert_resolution("nothing", 5));
  auto r = manual("cpu");
  r.source = {"alert", "k1"};
  const auto id = f.svc.create_ticket(r).ticket_id;
  EXPECT_TRUE(f.svc.link_alert_resolution("k1", 7000));
  EXPECT_FALSE(f.svc.link_alert_resolution("k1", 7000));
  const auto t = f.svc.get(id);
  EXPECT_EQ(t.comments.back().text, "source alert resolved at 7000");
  EXPECT_EQ(t.status, Status::triaged);
  EXPECT_EQ(t.comments.size(), 2u);
}

TEST(Persistence, ReopenKeepsTicketsRulesAndNumbering) {
  TempDir dir;
  ManualClock clock(0);
  {
    tsstore::MetadataStore meta(dir / "inc.jsonl", false);
    IncidentService svc(meta, clock);
    svc.set_triage_rules({{{{"application", {"oracle"}}}, "DB"}, {{}, "ops"}});
    svc.create_ticket(manual("a", Severity::major, attrs("oracle")));
  }
  tsstore::MetadataStore meta(dir / "inc.jsonl", false);
  IncidentService svc(meta, clock);
  EXPECT_EQ(svc.triage_rules().size(), 2u);
  EXPECT_EQ(svc.get("INC-000001").team, "DB");
  EXPECT_EQ(svc.create_ticket(manual("b")).ticket_id, "INC-000002");
}

// Alert engine wired straight to the ticket service.
struct Pipeline {
  ManualClock clock{0};
  tsstore::MetricStore store{{}, clock};
  alerting::StoreSource source{store};
  tsstore::MetadataStore meta;
  IncidentService svc{meta, clock};
  TicketActionSink sink{svc};
  alerting::Dispatcher dispatcher{meta, &sink};
  alerting::AlertEngine engine{meta, source, dispatcher, clock};

  void breach(int k, double v) {
    tsstore::MetricPoint p{tsstore::SeriesKey("cpu", {}, "s1"), k * 60'000 - 1000, v};
    store.write_points({&p, 1});
    clock.set(k * 60'000);
    engine.tick(k * 60'000);
  }
};

alerting::AlertRule cpu_rule() {
  alerting::AlertRule r;
  r.rule_id = "cpu-high";
  r.source = R"(SELECT last(value) FROM "cpu" WHERE ts >= 0 GROUP BY time(1m), server)";
  r.threshold = 90;
  r.eval_every_s = 60;
  r.severity = Severity::critical;
  r.actions = {{alerting::ActionType::create_incident, "infra", "cpu {value} on {server}"}};
  return r;
}

TEST(AlertLink, EndToEndFireOnceAndResolveNote) {
  Pipeline p;
  p.engine.put_rule(cpu_rule());
  for (int k = 1; k <= 5; ++k) p.breach(k, 95);
  ASSERT_EQ(p.svc.list().size(), 1u);
  const auto t = p.svc.list()[0];
  EXPECT_EQ(t.title, "cpu 95 on s1");
  EXPECT_EQ(t.severity, Severity::critical);
  EXPECT_EQ(t.team, "infra");
  EXPECT_EQ(t.attributes.at("server"), "s1");
  p.breach(6, 10);
  p.breach(7, 99);
  EXPECT_EQ(p.svc.list().size(), 2u);
  EXPECT_EQ(p.svc.get(t.ticket_id).comments.back().author, "alerting");
}

TEST(IncidentsHttp, Routes) {
  Fixture f;
  auto srv = std::make_shared<httplib::Server>();
  http::install_error_handler(*srv);
  mount_routes(*srv, f.svc);
  http::ServerThread st(srv, "127.0.0.1", 0);
  httplib::Client cli("127.0.0.1", st.port());
  auto post = [&](const std::string& path, const Json& body) { return cli.Post(path, body.dump(), "application/json"); };

  auto res = post("/v1/triage-rules", {{"rules", rules_to_json({{{{"application", {"oracle"}}}, "DB"}, {{}, "ops"}})}});
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(post("/v1/triage-rules", {{"rules", Json::array()}})->status, 400);
  res = post("/v1/tickets", {{"title", "tablespace"}, {"severity", "major"}, {"attributes", attrs("oracle")}});
  EXPECT_EQ(res->status, 201);
  const Json t = Json::parse(res->body);
  EXPECT_EQ(t["team"], "DB");
  const std::string id = t["ticket_id"];
  EXPECT_EQ(post("/v1/tickets", {{"title", "x"}, {"attributes", {{"server", "s1"}}}})->status, 400);
  EXPECT_EQ(post("/v1/tickets/" + id + "/transition", {{"status", "closed"}, {"actor", "amy"}})->status, 409);
  res = post("/v1/tickets/" + id + "/transition", {{"status", "in_progress"}, {"actor", "amy"}, {"revision", 1}});
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(post("/v1/tickets/" + id + "/comments", {{"author", "amy"}, {"text", "hi"}, {"revision", 1}})->status, 409);
  EXPECT_EQ(post("/v1/tickets/" + id + "/comments", {{"author", "amy"}, {"text", "hi"}})->status, 200);
  EXPECT_EQ(Json::parse(cli.Get("/v1/teams/DB/queue")->body)["tickets"].size(), 1u);
  EXPECT_EQ(Json::parse(cli.Get("/v1/tickets?q=tables")->body)["tickets"].size(), 1u);
  EXPECT_EQ(cli.Get("/v1/tickets/INC-404")->status, 404);

  alerting::IncidentRequest req;
  req.source_key = "r|server=s9|1";
  req.title = "via http";
  req.attributes = attrs("erp", "s9");
  alerting::HttpActionSink sink("http://127.0.0.1:" + std::to_string(st.port()));
  const auto a = sink.create_incident(req);
  EXPECT_EQ(sink.create_incident(req), a);
  sink.alert_resolved(req.source_key, 77);
  EXPECT_EQ(f.svc.get(a).comments.back().text, "source alert resolved at 77");
}

}  // namespace
}  // namespace miniops::incidents
