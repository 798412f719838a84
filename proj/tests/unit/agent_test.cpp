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

#include <charconv>
#include <deque>
#include <fstream>
#include <set>
#include <thread>

#include "miniops/agent/agent.hpp"
#include "miniops/common/error.hpp"
#include "miniops/common/http.hpp"
#include "miniops/common/rng.hpp"
#include "support/temp_dir.hpp"

namespace miniops::agent {
namespace {

using miniops::testing::TempDir;

CollectionTask exec_task(const std::string& id, const std::string& cmd, ParseMode mode = ParseMode::scalar,
                         std::int64_t period = 60) {
  CollectionTask t;
  t.task_id = id;
  t.spec = ExecSpec{cmd, mode};
  t.period_seconds = period;
  t.output_kind = mode == ParseMode::raw ? RecordKind::log : RecordKind::metric;
  return t;
}

CollectionTask builtin_task(const std::string& id, const std::string& gen, std::int64_t period = 60,
                            std::int64_t jitter = 0) {
  CollectionTask t;
  t.task_id = id;
  t.spec = BuiltinSpec{gen};
  t.period_seconds = period;
  t.jitter_seconds = jitter;
  return t;
}

Batch make_batch(const std::string& id, int records = 1) {
  Batch b{id, "a1", 0, {}};
  for (int i = 0; i < records; ++i) {
    Record r;
    r.topic = "metrics";
    r.server = "s1";
    r.name = "m";
    r.ts = i;
    r.value = i;
    b.records.push_back(r);
  }
  return b;
}

RunContext ctx() { return {"s1", "logs", nullptr}; }

// ---- task model ----

TEST(Task, JsonRoundTripAndValidation) {
  CollectionTask t = exec_task("ps", "ps -ef --no-headers | wc -l");
  t.jitter_seconds = 5;
  EXPECT_EQ(task_from_json(task_to_json(t)), t);
  CollectionTask probe;
  probe.task_id = "up";
  probe.spec = HttpProbeSpec{"http://127.0.0.1:1/health", "HEAD", 500};
  EXPECT_EQ(task_from_json(task_to_json(probe)), probe);

  auto bad = t;
  bad.period_seconds = 0;
  EXPECT_THROW(validate(bad), Error);
  bad = t;
  bad.jitter_seconds = t.period_seconds;
  EXPECT_THROW(validate(bad), Error);
  bad = t;
  bad.output_topic.clear();
  EXPECT_THROW(validate(bad), Error);
  Json j = task_to_json(t);
  j["kind"] = "sql";
  EXPECT_THROW(task_from_json(j), Error);
  j = task_to_json(t);
  j["spec"] = Json{{"url", "http://x"}};  // spec does not match the kind
  EXPECT_THROW(task_from_json(j), Error);
}

// ---- run_task ----

TEST(RunTask, ExecScalar) {
  ManualClock clock(1000);
  const auto r = run_task(exec_task("procs", "printf 217"), clock, ctx());
  EXPECT_EQ(r.outcome, Outcome::ok);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].value, 217.0);
  EXPECT_EQ(r.records[0].ts, 1000);
  EXPECT_EQ(r.records[0].server, "s1");
  EXPECT_EQ(r.records[0].name, "procs");
}

TEST(RunTask, ExecScalarParseFailure) {
  // Independent check that the literal is not a number.
  const std::string literal = "abc";
  double v = 0;
  const auto [ptr, ec] = std::from_chars(literal.data(), literal.data() + literal.size(), v);
  ASSERT_NE(ec, std::errc());

  ManualClock clock(0);
  const auto r = run_task(exec_task("t", "echo " + literal), clock, ctx());
  EXPECT_EQ(r.outcome, Outcome::exec_error);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].kind, RecordKind::log);
  EXPECT_EQ(r.records[0].topic, "logs");
}

TEST(RunTask, NonZeroExitCarriesStderr) {
  ManualClock clock(0);
  const auto r = run_task(exec_task("t", "echo disk on fire >&2; exit 3"), clock, ctx());
  EXPECT_EQ(r.outcome, Outcome::exec_error);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].kind, RecordKind::log);
  EXPECT_EQ(r.records[0].level, "error");
  EXPECT_EQ(r.records[0].message, "disk on fire");
}

TEST(RunTask, TimeoutYieldsNoRecords) {
  ManualClock clock(0);
  auto t = exec_task("slow", "sleep 5; echo 1");
  t.timeout_ms = 200;
  const auto start = std::chrono::steady_clock::now();
  const auto r = run_task(t, clock, ctx());
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(3));
  EXPECT_EQ(r.outcome, Outcome::timeout);
  EXPECT_TRUE(r.records.empty());
  EXPECT_GE(r.duration_ms, t.timeout_ms);
}

TEST(RunTask, LinesAndRawModes) {
  ManualClock clock(0);
  const auto lines = run_task(exec_task("t", "printf '1\\n2.5\\n\\nsda 7\\n'", ParseMode::lines), clock, ctx());
  ASSERT_EQ(lines.outcome, Outcome::ok);
  ASSERT_EQ(lines.records.size(), 3u);
  EXPECT_EQ(lines.records[1].value, 2.5);
  EXPECT_EQ(lines.records[2].tags.at("item"), "sda");
  EXPECT_EQ(lines.records[2].value, 7.0);

  const auto raw = run_task(exec_task("t", "printf 'hello\\nworld\\n'", ParseMode::raw), clock, ctx());
  ASSERT_EQ(raw.records.size(), 1u);
  EXPECT_EQ(raw.records[0].message, "hello\nworld");
}

TEST(RunTask, BuiltinGeneratorsEmitExactlyOnePoint) {
  ManualClock clock(0);
  for (const std::string g : {"cpu_load", "mem_free_bytes", "disk_free_bytes", "proc_count"}) {
    const auto r = run_task(builtin_task(g, g), clock, ctx());
    EXPECT_EQ(r.outcome, Outcome::ok) << g;
    ASSERT_EQ(r.records.size(), 1u) << g;
    EXPECT_EQ(r.records[0].name, g);
    EXPECT_GE(r.records[0].value, 0.0);
  }
  GeneratorRegistry reg;
  reg.add("sim.const", [](EpochMs) { return 4.0; });
  RunContext c = ctx();
  c.generators = &reg;
  EXPECT_EQ(run_task(builtin_task("x", "sim.const"), clock, c).records[0].value, 4.0);
  EXPECT_EQ(run_task(builtin_task("x", "nope"), clock, c).outcome, Outcome::exec_error);
}

TEST(RunTask, HttpProbeReachableAndDown) {
  auto server = std::make_shared<httplib::Server>();
  server->Get("/health", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });
  http::ServerThread st(server, "127.0.0.1", 0);
  ManualClock clock(0);
  CollectionTask t;
  t.task_id = "web";
  t.spec = HttpProbeSpec{st.endpoint().url() + "/health", "GET", 1000};
  auto r = run_task(t, clock, ctx());
  EXPECT_EQ(r.outcome, Outcome::ok);
  ASSERT_EQ(r.records.size(), 2u);
  EXPECT_EQ(r.records[0].name, "web.reachable");
  EXPECT_EQ(r.records[0].value, 1.0);
  EXPECT_EQ(r.records[1].name, "web.latency_ms");

  const int port = st.port();
  st.stop();
  t.spec = HttpProbeSpec{"http://127.0.0.1:" + std::to_string(port) + "/health", "GET", 500};
  r = run_task(t, clock, ctx());
  EXPECT_EQ(r.outcome, Outcome::ok);
  ASSERT_EQ(r.records.size(), 2u);
  EXPECT_EQ(r.records[0].value, 0.0);
}

// ---- scheduling ----

TEST(Scheduler, TenMinuteBoundary) {
  Scheduler s("a1");
  const auto t = builtin_task("ping", "cpu_load", 600);
  const EpochMs t0 = 1'000'000;
  s.mark_started("ping", t0);
  s.mark_finished("ping");
  EXPECT_TRUE(s.due({t}, t0 + 599'999).empty());
  EXPECT_EQ(s.due({t}, t0 + 600'000), std::vector<std::string>{"ping"});
}

std::map<std::string, int> simulate(const std::vector<CollectionTask>& tasks, EpochMs horizon_ms,
                                    const std::string& agent = "a1") {
  Scheduler s(agent);
  std::map<std::string, int> fires;
  for (EpochMs now = 0; now < horizon_ms; ++now) {
    for (const auto& id : s.due(tasks, now)) {
      s.mark_started(id, now);
      s.mark_finished(id);
      ++fires[id];
    }
  }
  return fires;
}

TEST(Scheduler, FireCountsMatchTickOracle) {
  const std::vector<CollectionTask> tasks = {builtin_task("a", "x", 10), builtin_task("b", "x", 20),
                                             builtin_task("c", "x", 30)};
  const auto fires = simulate(tasks, 60'000);
  // Oracle: fire instants are k*p for k >= 0 below the horizon.
  for (const auto& t : tasks) {
    int expected = 0;
    for (EpochMs at = 0; at < 60'000; at += t.period_seconds * 1000) ++expected;
    EXPECT_EQ(fires.at(t.task_id), expected) << t.task_id;
  }
  EXPECT_EQ(fires.at("a"), 6);
  EXPECT_EQ(fires.at("b"), 3);
  EXPECT_EQ(fires.at("c"), 2);
}

TEST(Scheduler, ExecutionCountBoundsAndStableJitter) {
  Rng rng(43);
  for (int trial = 0; trial < 30; ++trial) {
    const std::int64_t p = rng.uniform_int(1, 20);
    const std::int64_t j = rng.uniform_int(0, p - 1);
    const EpochMs horizon = rng.uniform_int(1, 120) * 1000;
    const auto task = builtin_task("t" + std::to_string(trial), "x", p, j);
    const int n = simulate({task}, horizon).at(task.task_id);
    // Fires are (p + jitter) apart; without jitter the count is within [T/p, T/p + 1].
    if (j == 0) {
      EXPECT_GE(n, horizon / (p * 1000));
      EXPECT_LE(n, horizon / (p * 1000) + 1);
    }
    const EpochMs step = p * 1000 + jitter_offset_ms("a1", task);
    EXPECT_EQ(n, (horizon - 1) / step + 1);
    EXPECT_EQ(jitter_offset_ms("a1", task), jitter_offset_ms("a1", task));
    EXPECT_LT(jitter_offset_ms("a1", task), std::max<std::int64_t>(j, 1) * 1000);
    EXPECT_EQ(jitter_offset_ms("a1", task) % 1000, 0);
  }
}

TEST(Scheduler, SkipIfRunning) {
  Scheduler s("a1");
  const auto t = builtin_task("t", "x", 1);
  s.mark_started("t", 0);
  EXPECT_TRUE(s.due({t}, 5000).empty());
  s.mark_finished("t");
  EXPECT_EQ(s.due({t}, 5000).size(), 1u);
}

TEST(ApplyConfig, VersionGateAndSchedulePreservation) {
  Scheduler s("a1");
  TaskSet current{4, {builtin_task("keep", "x", 600), builtin_task("drop", "x", 600)}};
  s.mark_started("keep", 1000);
  s.mark_finished("keep");
  s.mark_started("drop", 1000);
  s.mark_finished("drop");

  EXPECT_FALSE(apply_config(current, TaskSet{4, {}}, s).applied);
  EXPECT_EQ(current.tasks.size(), 2u);

  TaskSet v5{5, {builtin_task("keep", "x", 60), builtin_task("new", "x", 600)}};
  EXPECT_TRUE(apply_config(current, v5, s).applied);
  EXPECT_EQ(current, v5);
  // Period 600 -> 60: next due recomputed from the original last fire.
  EXPECT_EQ(s.next_due(current.tasks[0]), 1000 + 60'000);
  EXPECT_FALSE(s.next_due(current.tasks[1]));  // new: due on the first tick
  EXPECT_FALSE(s.last_fire("drop"));
}

// ---- spool ----

TEST(Spool, DropOldestAndEvictionReport) {
  TempDir dir;
  Spool sp(dir / "spool", 3, false);
  for (int i = 1; i <= 3; ++i) EXPECT_TRUE(sp.append(make_batch("b" + std::to_string(i))).evicted.empty());
  const auto rep = sp.append(make_batch("b4"));
  ASSERT_EQ(rep.evicted.size(), 1u);
  EXPECT_EQ(rep.evicted[0].batch_id, "b1");
  EXPECT_EQ(sp.batch_ids(), (std::vector<std::string>{"b2", "b3", "b4"}));
}

TEST(Spool, SurvivesRestartInOrder) {
  TempDir dir;
  {
    Spool sp(dir / "spool", 10);
    for (int i = 0; i < 5; ++i) sp.append(make_batch("b" + std::to_string(i), i + 1));
    sp.remove("b0");
  }
  Spool again(dir / "spool", 10);
  EXPECT_EQ(again.batch_ids(), (std::vector<std::string>{"b1", "b2", "b3", "b4"}));
  EXPECT_EQ(again.front()->records.size(), 2u);
  again.append(make_batch("b5"));
  Spool third(dir / "spool", 10);
  EXPECT_EQ(third.batch_ids().back(), "b5");
}

TEST(Spool, FifoOracleUnderManyAppends) {
  TempDir dir;
  Spool sp(dir / "spool", 10, false);
  std::deque<std::string> oracle;
  std::size_t evictions = 0;
  for (int i = 0; i < 100; ++i) {
    const std::string id = "b" + std::to_string(i);
    const auto rep = sp.append(make_batch(id));
    oracle.push_back(id);
    for (const auto& e : rep.evicted) {
      ASSERT_EQ(e.batch_id, oracle.front());
      oracle.pop_front();
      ++evictions;
    }
    ASSERT_LE(sp.size(), 10u);
  }
  EXPECT_EQ(evictions, 90u);
  EXPECT_EQ(sp.batch_ids(), std::vector<std::string>(oracle.begin(), oracle.end()));
  EXPECT_EQ(sp.batch_ids().front(), "b90");
}

TEST(Spool, WriteFailureKeepsBatchInMemory) {
  TempDir dir;
  Spool sp(dir / "spool", 10, false);
  std::filesystem::remove_all(dir / "spool");
  { std::ofstream(dir / "spool") << "not a directory"; }
  const auto rep = sp.append(make_batch("b1"));
  EXPECT_TRUE(rep.volatile_entry);
  EXPECT_EQ(sp.size(), 1u);
  EXPECT_EQ(sp.volatile_entries(), 1u);
  EXPECT_TRUE(sp.remove("b1"));
}

TEST(Spool, ConcurrentAppenderAndDrainer) {
  TempDir dir;
  Spool sp(dir / "spool", 1000, false);
  std::atomic<bool> done{false};
  std::vector<std::string> drained;
  std::thread drainer([&] {
    while (!done || sp.size() > 0) {
      if (auto b = sp.front()) {
        ASSERT_TRUE(sp.remove(b->batch_id));
        drained.push_back(b->batch_id);
      }
    }
  });
  for (int i = 0; i < 500; ++i) sp.append(make_batch("b" + std::to_string(i)));
  done = true;
  drainer.join();
  ASSERT_EQ(drained.size(), 500u);
  for (int i = 0; i < 500; ++i) EXPECT_EQ(drained[i], "b" + std::to_string(i));
}

// ---- flush ----

class FakeTransport : public Transport {
 public:
  SendResult send(const Batch& b) override {
    attempts.push_back(b.batch_id);
    if (down) return {SendStatus::failed, "", "down"};
    if (reject.contains(b.batch_id)) return {SendStatus::rejected, "", "bad"};
    if (!ack_only.empty() && !ack_only.contains(b.batch_id)) return {SendStatus::failed, "", "no ack"};
    delivered.push_back(b.batch_id);
    for (const auto& r : b.records) records.push_back(r);
    return {SendStatus::acked, b.batch_id, "ok"};
  }
  bool down = false;
  std::set<std::string> ack_only, reject;
  std::vector<std::string> attempts, delivered;
  std::vector<Record> records;
};

TEST(Flusher, HappyPathOldestFirst) {
  Spool sp(std::nullopt, 10);
  sp.append(make_batch("b1"));
  sp.append(make_batch("b2"));
  FakeTransport tr;
  Flusher f;
  const auto rep = f.flush(sp, tr, 0);
  EXPECT_EQ(rep.acked, (std::vector<std::string>{"b1", "b2"}));
  EXPECT_EQ(sp.size(), 0u);
}

TEST(Flusher, PartialAckLeavesTheRest) {
  Spool sp(std::nullopt, 10);
  sp.append(make_batch("b1"));
  sp.append(make_batch("b2"));
  FakeTransport tr;
  tr.ack_only = {"b1"};
  Flusher f;
  const auto rep = f.flush(sp, tr, 0);
  EXPECT_TRUE(rep.failed);
  EXPECT_EQ(sp.batch_ids(), std::vector<std::string>{"b2"});
}

TEST(Flusher, ExponentialBackoffCapped) {
  BackoffPolicy p;
  std::vector<EpochMs> delays;
  for (std::uint32_t n = 1; n <= 9; ++n) delays.push_back(p.delay(n));
  EXPECT_EQ(delays, (std::vector<EpochMs>{1000, 2000, 4000, 8000, 16000, 32000, 60000, 60000, 60000}));

  Spool sp(std::nullopt, 10);
  sp.append(make_batch("b1"));
  FakeTransport tr;
  tr.down = true;
  Flusher f;
  EXPECT_TRUE(f.flush(sp, tr, 0).failed);
  EXPECT_EQ(f.next_attempt_at(), 1000);
  EXPECT_TRUE(f.flush(sp, tr, 999).deferred);
  EXPECT_TRUE(f.flush(sp, tr, 1000).failed);
  EXPECT_EQ(f.next_attempt_at(), 3000);
  tr.down = false;
  EXPECT_EQ(f.flush(sp, tr, 3000).acked, std::vector<std::string>{"b1"});
  EXPECT_EQ(f.consecutive_failures(), 0u);
  EXPECT_EQ(tr.attempts.size(), 3u);
}

TEST(Flusher, RejectedBatchDoesNotBlockTheSpool) {
  Spool sp(std::nullopt, 10);
  sp.append(make_batch("bad"));
  sp.append(make_batch("good"));
  FakeTransport tr;
  tr.reject = {"bad"};
  Flusher f;
  const auto rep = f.flush(sp, tr, 0);
  EXPECT_EQ(rep.rejected, std::vector<std::string>{"bad"});
  EXPECT_EQ(rep.acked, std::vector<std::string>{"good"});
}

// At-least-once: with the spool never full, every produced record reaches the
// transport despite random transient failures, in production order.
TEST(Agent, AtLeastOnceUnderRandomTransientFailures) {
  Rng rng(47);
  ManualClock clock(0);
  FakeTransport tr;
  AgentOptions o;
  o.agent_id = "a1";
  o.spool_capacity = 10'000;
  o.batch_interval_ms = 1000;
  o.async_execution = false;
  o.boot_id = "boot";
  GeneratorRegistry reg;
  double v = 0;
  reg.add("counter", [&](EpochMs) { return v += 1; });
  Agent agent(o, tr, nullptr, clock, reg);
  agent.set_tasks(TaskSet{1, {builtin_task("c", "counter", 1)}});
  for (EpochMs now = 0; now < 600'000; now += 1000) {
    clock.set(now);
    tr.down = rng.coin(0.4);
    agent.step(now);
  }
  tr.down = false;
  for (EpochMs now = 600'000; agent.spool().size() > 0; now += 60'000) agent.flush(now);
  std::set<double> seen;
  double last = 0;
  for (const auto& r : tr.records) {
    EXPECT_GT(r.value, last);  // order preserved
    last = r.value;
    seen.insert(r.value);
  }
  EXPECT_EQ(seen.size(), static_cast<std::size_t>(v));
  EXPECT_EQ(agent.stats().batches_evicted, 0u);
}

TEST(Agent, BatchIdsAreUniqueAcrossRestarts) {
  TempDir dir;
  std::set<std::string> ids;
  for (int boot = 0; boot < 3; ++boot) {
    ManualClock clock(0);
    FakeTransport tr;
    tr.down = true;
    AgentOptions o;
    o.agent_id = "a1";
    o.spool_dir = dir / "spool";
    o.spool_sync = false;
    o.async_execution = false;
    GeneratorRegistry reg;
    reg.add("one", [](EpochMs) { return 1.0; });
    Agent agent(o, tr, nullptr, clock, reg);
    agent.set_tasks(TaskSet{1, {builtin_task("c", "one", 1)}});
    for (EpochMs now = 0; now < 5000; now += 1000) {
      agent.tick(now);
      agent.seal(now);
    }
    for (const auto& id : agent.spool().batch_ids()) ids.insert(id);
  }
  EXPECT_EQ(ids.size(), 15u);
}

}  // namespace
}  // namespace miniops::agent
