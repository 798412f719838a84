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

#include <set>
#include <thread>

#include "miniops/agent/transport.hpp"
#include "miniops/common/error.hpp"
#include "miniops/common/http.hpp"
#include "miniops/common/rng.hpp"
#include "miniops/controlplane/controlplane.hpp"
#include "miniops/controlplane/http_service.hpp"
#include "support/temp_dir.hpp"

namespace miniops::controlplane {
namespace {

using miniops::testing::TempDir;

ServerDescriptor server(const std::string& id, const std::string& role, const std::string& client = "A",
                        TagMap tags = {}) {
  return {id, client, role, std::move(tags), 0};
}

TaskTemplate tmpl(const std::string& id, TargetSelector sel = {}) {
  TaskTemplate t;
  t.template_id = id;
  t.task.spec = agent::BuiltinSpec{"cpu_load"};
  t.task.period_seconds = 600;
  t.selector = std::move(sel);
  return t;
}

TargetSelector where(const std::string& text) { return parse_selector(text); }

// Independent evaluation of a selector over a descriptor.
bool oracle_match(const TargetSelector& s, const ServerDescriptor& d) {
  for (const auto& p : s.predicates) {
    std::optional<std::string> v;
    if (p.field == "role") v = d.role;
    else if (p.field == "client_name" || p.field == "client") v = d.client_name;
    else if (p.field == "server_id") v = d.server_id;
    else if (d.tags.count(p.field.substr(5))) v = d.tags.at(p.field.substr(5));
    const bool hit = v && std::count(p.values.begin(), p.values.end(), *v) > 0;
    if (p.op == Op::neq ? hit : !hit) return false;
  }
  return true;
}

struct Fixture {
  ManualClock clock{0};
  tsstore::MetadataStore meta;
  ControlPlane cp{meta, clock};

  void fleet(int n, int dbms) {
    for (int i = 0; i < n; ++i) {
      cp.register_agent(server("s" + std::to_string(i), i < dbms ? "dbms" : "erp", i % 2 ? "A" : "B"));
    }
  }
};

TEST(Registry, RegisterAndScale) {
  Fixture f;
  f.cp.register_agent(server("db1", "dbms"));
  ASSERT_EQ(f.cp.agents().size(), 1u);
  EXPECT_EQ(f.cp.agents()[0].descriptor.role, "dbms");
  for (int i = 0; i < 1000; ++i) f.cp.register_agent(server("x" + std::to_string(i), "web"));
  EXPECT_EQ(f.cp.agents().size(), 1001u);
  EXPECT_THROW(f.cp.register_agent(server("", "web")), Error);
  EXPECT_THROW(f.cp.register_agent(server("norole", "")), Error);
}

TEST(Registry, ReRegisterBumpsIffMembershipChanges) {
  Fixture f;
  f.cp.register_agent(server("s1", "web", "A", {{"dc", "eu"}}));
  f.cp.plan_task(tmpl("eu-only", where("tags.dc=eu")));
  const auto v0 = f.cp.compile_config("s1").version;
  auto ack = f.cp.register_agent(server("s1", "web", "A", {{"dc", "eu"}, {"rack", "7"}}));
  EXPECT_FALSE(ack.version_bumped);
  EXPECT_EQ(ack.version, v0);
  ack = f.cp.register_agent(server("s1", "web", "A", {{"dc", "us"}}));
  EXPECT_TRUE(ack.version_bumped);
  EXPECT_EQ(ack.version, v0 + 1);
  EXPECT_TRUE(f.cp.compile_config("s1").tasks.empty());
  EXPECT_EQ(f.cp.agents()[0].descriptor.tags, (TagMap{{"dc", "us"}}));
}

TEST(Planning, AffectedCounts) {
  Fixture f;
  f.fleet(50, 10);
  EXPECT_EQ(f.cp.plan_task(tmpl("ping")), 50u);
  EXPECT_EQ(f.cp.plan_task(tmpl("table-size", where("role=dbms"))), 10u);
  EXPECT_EQ(f.cp.plan_task(tmpl("nobody", where("role=mainframe"))), 0u);
  EXPECT_TRUE(f.cp.find_template("nobody"));
  EXPECT_THROW(f.cp.plan_task(tmpl("ping")), Error);
  EXPECT_THROW(f.cp.plan_task(tmpl("bad", where("colour=red"))), Error);
}

TEST(Planning, UnplanAndErrors) {
  Fixture f;
  f.fleet(50, 10);
  f.cp.plan_task(tmpl("ping"));
  EXPECT_EQ(f.cp.unplan_task("ping"), 50u);
  try {
    f.cp.unplan_task("ping");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::conflict);
  }
  try {
    f.cp.unplan_task("ghost");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::not_found);
  }
  for (const auto& a : f.cp.agents()) EXPECT_TRUE(f.cp.compile_config(a.descriptor.server_id).tasks.empty());
}

TEST(Planning, PlanUnplanPlanIsMonotoneAndConverges) {
  Fixture f;
  f.fleet(5, 2);
  const auto v0 = f.cp.compile_config("s0").version;
  f.cp.plan_task(tmpl("ping"));
  const auto v1 = f.cp.compile_config("s0").version;
  const auto with = f.cp.compile_config("s0").tasks;
  f.cp.unplan_task("ping");
  const auto v2 = f.cp.compile_config("s0").version;
  EXPECT_TRUE(f.cp.compile_config("s0").tasks.empty());
  f.cp.plan_task(tmpl("ping"));
  const auto v3 = f.cp.compile_config("s0").version;
  EXPECT_LT(v0, v1);
  EXPECT_LT(v1, v2);
  EXPECT_LT(v2, v3);
  EXPECT_EQ(v3 - v1, 2);  // disabled then enabled again
  EXPECT_EQ(f.cp.compile_config("s0").tasks, with);
}

TEST(Targets, Examples) {
  Fixture f;
  f.cp.register_agent(server("a", "dbms", "A"));
  f.cp.register_agent(server("b", "dbms", "B"));
  f.cp.register_agent(server("c", "dbms", "C"));
  f.cp.register_agent(server("d", "erp", "A"));
  f.cp.register_agent(server("e", "web", "B"));
  EXPECT_EQ(f.cp.resolve_targets({}).size(), 5u);
  EXPECT_EQ(f.cp.resolve_targets(where("role=dbms")), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(f.cp.resolve_targets(where("role=dbms,client=A|B")), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(f.cp.resolve_targets(where("role!=dbms")), (std::vector<std::string>{"d", "e"}));
  EXPECT_THROW(f.cp.resolve_targets(where("colour=red")), Error);
  EXPECT_THROW(parse_selector("role"), Error);
}

TEST(Targets, RandomSelectorsMatchSetFilterOracle) {
  Rng rng(53);
  Fixture f;
  const std::vector<std::string> roles = {"dbms", "erp", "web"}, clients = {"A", "B", "C"}, dcs = {"eu", "us"};
  std::vector<ServerDescriptor> fleet;
  for (int i = 0; i < 200; ++i) {
    TagMap tags;
    if (rng.coin(0.7)) tags["dc"] = dcs[rng.uniform_int(0, 1)];
    fleet.push_back(server("s" + std::to_string(i), roles[rng.uniform_int(0, 2)], clients[rng.uniform_int(0, 2)], tags));
    f.cp.register_agent(fleet.back());
  }
  const std::vector<std::string> fields = {"role", "client_name", "tags.dc", "server_id"};
  for (int trial = 0; trial < 300; ++trial) {
    TargetSelector s;
    for (int k = 0, n = static_cast<int>(rng.uniform_int(0, 3)); k < n; ++k) {
      Predicate p;
      p.field = fields[rng.uniform_int(0, 3)];
      p.op = static_cast<Op>(rng.uniform_int(0, 2));
      const auto& pool = p.field == "role" ? roles : p.field == "tags.dc" ? dcs : clients;
      const int count = p.op == Op::in ? static_cast<int>(rng.uniform_int(1, 3)) : 1;
      for (int c = 0; c < count; ++c) p.values.push_back(pool[rng.uniform_int(0, pool.size() - 1)]);
      s.predicates.push_back(p);
    }
    std::vector<std::string> expected;
    for (const auto& d : fleet) {
      if (oracle_match(s, d)) expected.push_back(d.server_id);
    }
    std::sort(expected.begin(), expected.end());
    EXPECT_EQ(f.cp.resolve_targets(s), expected);
    EXPECT_EQ(selector_from_json(selector_to_json(s)), s);
  }
}

TEST(Compile, MatchesMembershipOracleAndIsDeterministic) {
  Rng rng(59);
  Fixture f;
  f.fleet(30, 12);
  std::vector<TaskTemplate> all;
  const std::vector<std::string> sels = {"", "role=dbms", "role=erp", "client=A", "role=dbms,client=B", "client!=A",
                                         "server_id=s3|s4|s5"};
  for (int i = 0; i < 12; ++i) {
    all.push_back(tmpl("t" + std::to_string(i), where(sels[rng.uniform_int(0, sels.size() - 1)])));
    f.cp.plan_task(all.back());
  }
  std::set<std::string> disabled;
  for (int i = 0; i < 4; ++i) {
    const std::string id = "t" + std::to_string(rng.uniform_int(0, 11));
    if (disabled.insert(id).second) f.cp.unplan_task(id);
  }
  for (const auto& a : f.cp.agents()) {
    const auto cfg = f.cp.compile_config(a.descriptor.server_id);
    std::set<std::string> got, expected;
    for (const auto& t : cfg.tasks) got.insert(t.task_id);
    for (const auto& t : all) {
      if (!disabled.contains(t.template_id) && oracle_match(t.selector, a.descriptor)) expected.insert(t.template_id);
    }
    EXPECT_EQ(got, expected) << a.descriptor.server_id;
    EXPECT_EQ(f.cp.compile_config(a.descriptor.server_id), cfg);
  }
  EXPECT_THROW(f.cp.compile_config("nope"), Error);
}

TEST(Compile, ThreeOfFiveTemplates) {
  Fixture f;
  f.cp.register_agent(server("db1", "dbms", "A"));
  f.cp.plan_task(tmpl("t1"));
  f.cp.plan_task(tmpl("t2", where("role=dbms")));
  f.cp.plan_task(tmpl("t3", where("client=A")));
  f.cp.plan_task(tmpl("t4", where("role=erp")));
  f.cp.plan_task(tmpl("t5", where("client=B")));
  EXPECT_EQ(f.cp.compile_config("db1").tasks.size(), 3u);
}

TEST(Executions, WindowQueryMatchesLinearScan) {
  Fixture f;
  Rng rng(61);
  std::vector<ExecutionLog> logs;
  for (int i = 0; i < 100; ++i) {
    logs.push_back({i % 3 ? "ping" : "size", "s" + std::to_string(i % 4), i * 1000, "ok", 5});
    f.cp.record_execution(logs.back());
  }
  ExecutionQuery q;
  q.from = 30'000;
  q.to = 70'000;
  EXPECT_EQ(f.cp.query_executions(q).size(), 40u);
  q.from = q.to;
  EXPECT_TRUE(f.cp.query_executions(q).empty());
  for (int trial = 0; trial < 50; ++trial) {
    ExecutionQuery r;
    if (rng.coin(0.5)) r.task_id = rng.coin(0.5) ? "ping" : "size";
    if (rng.coin(0.5)) r.server_id = "s" + std::to_string(rng.uniform_int(0, 3));
    r.from = rng.uniform_int(0, 100'000);
    r.to = r.from + rng.uniform_int(0, 50'000);
    std::vector<ExecutionLog> expected;
    for (const auto& l : logs) {
      if ((!r.task_id || l.task_id == *r.task_id) && (!r.server_id || l.server_id == *r.server_id) &&
          l.started_at >= r.from && l.started_at < r.to) {
        expected.push_back(l);
      }
    }
    EXPECT_EQ(f.cp.query_executions(r), expected);
  }
}

TEST(Persistence, ReopenRestoresRegistryTemplatesAndVersions) {
  TempDir dir;
  ManualClock clock(0);
  agent::TaskSet before;
  {
    tsstore::MetadataStore meta(dir / "cp.jsonl", false);
    ControlPlane cp(meta, clock);
    cp.register_agent(server("s1", "dbms"));
    cp.plan_task(tmpl("ping"));
    cp.plan_task(tmpl("size", where("role=dbms")));
    cp.unplan_task("ping");
    cp.record_execution({"size", "s1", 5, "ok", 1});
    before = cp.compile_config("s1");
  }
  tsstore::MetadataStore meta(dir / "cp.jsonl", false);
  ControlPlane cp(meta, clock);
  EXPECT_EQ(cp.compile_config("s1"), before);
  EXPECT_EQ(cp.query_executions({}).size(), 1u);
  EXPECT_FALSE(cp.find_template("ping")->enabled);
}

TEST(Concurrency, VersionsStayMonotoneUnderConcurrentWriters) {
  Fixture f;
  f.fleet(20, 5);
  std::atomic<bool> stop{false};
  std::thread reader([&] {
    std::int64_t last = 0;
    while (!stop) {
      const auto v = f.cp.compile_config("s0").version;
      EXPECT_GE(v, last);
      last = v;
    }
  });
  std::vector<std::thread> writers;
  for (int w = 0; w < 3; ++w) {
    writers.emplace_back([&, w] {
      for (int i = 0; i < 30; ++i) {
        const std::string id = "w" + std::to_string(w) + "-" + std::to_string(i);
        f.cp.plan_task(tmpl(id));
        if (i % 2) f.cp.unplan_task(id);
      }
    });
  }
  for (auto& t : writers) t.join();
  stop = true;
  reader.join();
  EXPECT_EQ(f.cp.compile_config("s0").tasks.size(), 45u);
  EXPECT_EQ(f.cp.compile_config("s0").version, 1 + 90 + 45);
}

TEST(ControlPlaneHttp, AgentClientRoundTrip) {
  Fixture f;
  auto srv = std::make_shared<httplib::Server>();
  http::install_error_handler(*srv);
  mount_routes(*srv, f.cp);
  http::ServerThread st(srv, "127.0.0.1", 0);
  agent::HttpControlPlaneClient client(st.endpoint().url());
  client.register_agent({"db1", "A", "dbms", {{"dc", "eu"}}});
  f.cp.plan_task(tmpl("size", where("role=dbms")));
  const auto set = client.fetch_tasks("db1");
  ASSERT_TRUE(set);
  EXPECT_EQ(set->version, 2);
  ASSERT_EQ(set->tasks.size(), 1u);
  EXPECT_EQ(set->tasks[0].task_id, "size");
  EXPECT_FALSE(client.fetch_tasks("ghost"));
  client.record_execution(execution_to_json({"size", "db1", 1, "ok", 3}));
  EXPECT_EQ(f.cp.query_executions({}).size(), 1u);

  httplib::Client cli("127.0.0.1", st.port());
  auto res = cli.Post("/v1/templates",
                      Json{{"template_id", "ping"},
                           {"task", {{"kind", "builtin_metric"}, {"spec", {{"generator", "cpu_load"}}},
                                     {"schedule", {{"period_seconds", 600}}}}},
                           {"selector", Json::array()}}
                          .dump(),
                      "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(Json::parse(res->body)["affected"], 1);
  res = cli.Delete("/v1/templates/ghost");
  EXPECT_EQ(res->status, 404);
  res = cli.Post("/v1/targets", Json{{"text", "role=dbms"}}.dump(), "application/json");
  EXPECT_EQ(Json::parse(res->body)["servers"], Json::array({"db1"}));
  res = cli.Post("/v1/targets", Json{{"text", "colour=red"}}.dump(), "application/json");
  EXPECT_EQ(res->status, 400);
}

}  // namespace
}  // namespace miniops::controlplane
