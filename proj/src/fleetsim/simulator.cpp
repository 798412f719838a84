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

#include "miniops/fleetsim/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <set>
#include <thread>
#include <tuple>

#include <httplib.h>

#include "miniops/agent/agent.hpp"
#include "miniops/common/error.hpp"

namespace miniops::fleetsim {

std::string ledger_text(const std::vector<LedgerEntry>& ledger) {
  std::string out;
  char num[40];
  for (const auto& e : ledger) {
    std::snprintf(num, sizeof num, "%.17g", e.value);
    out += e.server + ',' + e.metric + ',' + std::to_string(e.ts) + ',' + num + '\n';
  }
  return out;
}

Json report_to_json(const Report& r, bool include_ledger) {
  Json evicted = Json::array();
  for (const auto& b : r.evicted) evicted.push_back({{"batch_id", b.batch_id}, {"records", b.records.size()}});
  Json j{{"produced", r.produced},           {"batches_sealed", r.batches_sealed},
         {"batches_acked", r.batches_acked}, {"batches_evicted", r.batches_evicted},
         {"records_evicted", r.records_evicted}, {"stored", r.stored},
         {"missing", r.missing},             {"silent_loss", r.silent_loss},
         {"unexpected", r.unexpected},       {"spool_left", r.spool_left},
         {"evicted", evicted},               {"wall_ms", r.wall_ms},
         {"ledger_digest", r.ledger_digest}};
  if (include_ledger) {
    Json l = Json::array();
    for (const auto& e : r.ledger) l.push_back({e.server, e.metric, e.ts, e.value});
    j["ledger"] = l;
  }
  return j;
}

Simulator::Simulator(stack::Stack& stack, ManualClock& clock) : stack_(stack), clock_(clock) {}

namespace {

// Per-server state: the agent plus the generators feeding it and what they produced.
struct SimAgent {
  std::string server;
  std::vector<std::unique_ptr<SeriesGenerator>> generators;
  std::vector<LedgerEntry> ledger;
  std::unique_ptr<agent::HttpTransport> transport;
  std::unique_ptr<agent::Agent> agent;
};

bool active(const Fault& f, EpochMs offset) { return offset >= f.start_ms && offset < f.end_ms; }

bool paused(const Scenario& s, const std::string& server, EpochMs offset) {
  for (const auto& f : s.faults) {
    if (f.type != FaultType::agent_pause || !active(f, offset)) continue;
    if (f.scope.empty() || std::find(f.scope.begin(), f.scope.end(), server) != f.scope.end()) return true;
  }
  return false;
}

template <class F>
void for_each_parallel(std::vector<SimAgent>& agents, int parallelism, F&& f) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(parallelism), agents.size());
  if (workers <= 1) {
    for (auto& a : agents) f(a);
    return;
  }
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      for (std::size_t i = w; i < agents.size(); i += workers) f(agents[i]);
    });
  }
  for (auto& t : threads) t.join();
}

std::string hex_digest(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

Report Simulator::run(const Scenario& s) {
  validate(s);
  const auto wall_start = std::chrono::steady_clock::now();
  std::string ingester_url;
  try {
    ingester_url = stack_.url("ingester");
  } catch (const Error&) {
    throw Error(Errc::unavailable, "ingester is not running");
  }
  {
    httplib::Client probe(ingester_url);
    probe.set_connection_timeout(std::chrono::seconds(2));
    auto res = probe.Get("/v1/health");
    if (!res) throw Error(Errc::unavailable, "ingester unreachable at " + ingester_url);
  }

  clock_.set(s.start_ms);
  std::vector<SimAgent> agents(static_cast<std::size_t>(s.servers));
  for (int i = 0; i < s.servers; ++i) {
    auto& a = agents[static_cast<std::size_t>(i)];
    a.server = server_name(i);
    agent::GeneratorRegistry registry;
    agent::TaskSet tasks;
    tasks.version = 1;
    for (const auto& m : metrics_for(s, a.server)) {
      a.generators.push_back(std::make_unique<SeriesGenerator>(s.seed, a.server, m, s.start_ms, s.tick_ms));
      SeriesGenerator* gen = a.generators.back().get();
      registry.add("sim." + m.name, [gen, &a, name = m.name](EpochMs now) {
        const double v = gen->at(now);
        a.ledger.push_back({a.server, name, now, v});
        return v;
      });
      agent::CollectionTask t;
      t.task_id = m.name;
      t.name = m.name;
      t.spec = agent::BuiltinSpec{"sim." + m.name};
      t.period_seconds = s.tick_ms / kMsPerSecond;
      tasks.tasks.push_back(t);
    }
    agent::AgentOptions o;
    o.agent_id = a.server;
    o.info = {a.server, "sim", "sim", {}};
    o.spool_capacity = s.spool_capacity;
    o.spool_sync = false;
    o.batch_interval_ms = s.batch_interval_ms;
    o.boot_id = "s" + std::to_string(s.seed);
    o.async_execution = false;
    o.report_executions = false;
    a.transport = std::make_unique<agent::HttpTransport>(ingester_url);
    a.agent = std::make_unique<agent::Agent>(o, *a.transport, nullptr, clock_, std::move(registry));
    a.agent->set_tasks(tasks);
  }

  const EpochMs ticks = s.duration_ms / s.tick_ms;
  for (EpochMs k = 0; k < ticks; ++k) {
    const EpochMs offset = k * s.tick_ms;
    const EpochMs now = s.start_ms + offset;
    clock_.set(now);
    bool outage = false;
    for (const auto& f : s.faults) outage = outage || (f.type == FaultType::ingester_outage && active(f, offset));
    stack_.ingester.set_available(!outage);
    for_each_parallel(agents, s.parallelism, [&](SimAgent& a) {
      if (!paused(s, a.server, offset)) a.agent->step(now);
    });
    stack_.consumer.poll_once();
    if (s.accel > 0) {
      std::this_thread::sleep_for(std::chrono::microseconds(static_cast<std::int64_t>(1000.0 * s.tick_ms / s.accel)));
    }
  }

  // Drain: seal what is left, then keep flushing on advancing virtual time so
  // every backoff expires.
  stack_.ingester.set_available(true);
  EpochMs now = s.start_ms + s.duration_ms;
  clock_.set(now);
  for_each_parallel(agents, s.parallelism, [&](SimAgent& a) { a.agent->seal(now); });
  const EpochMs drain_end = now + s.drain_limit_ms;
  while (true) {
    for_each_parallel(agents, s.parallelism, [&](SimAgent& a) { a.agent->flush(now); });
    std::size_t left = 0;
    for (auto& a : agents) left += a.agent->spool().size();
    if (left == 0 || now >= drain_end) break;
    now += kMsPerSecond;
    clock_.set(now);
  }
  stack_.consumer.drain();

  Report r;
  for (auto& a : agents) {
    r.ledger.insert(r.ledger.end(), a.ledger.begin(), a.ledger.end());
    const auto st = a.agent->stats();
    r.batches_sealed += st.batches_sealed;
    r.batches_acked += st.batches_acked;
    r.batches_evicted += st.batches_evicted;
    r.records_evicted += st.records_evicted;
    r.spool_left += a.agent->spool().size();
    for (auto& b : a.agent->evicted_batches()) r.evicted.push_back(std::move(b));
  }
  std::sort(r.ledger.begin(), r.ledger.end(), [](const LedgerEntry& x, const LedgerEntry& y) {
    return std::tie(x.server, x.metric, x.ts) < std::tie(y.server, y.metric, y.ts);
  });
  r.produced = r.ledger.size();

  // Reconcile against the store.
  using Key = std::tuple<std::string, std::string, EpochMs>;
  std::set<std::string> names;
  for (const auto& e : r.ledger) names.insert(e.metric);
  std::map<Key, double> stored;
  for (const auto& name : names) {
    for (const auto& p : stack_.metrics.scan(name)) stored[{p.series.tag("server"), name, p.ts}] = p.value;
  }
  std::set<Key> evicted;
  for (const auto& b : r.evicted) {
    for (const auto& rec : b.records) evicted.insert({rec.server, rec.name, rec.ts});
  }
  std::set<Key> ledger_keys;
  for (const auto& e : r.ledger) {
    Key k{e.server, e.metric, e.ts};
    ledger_keys.insert(k);
    auto it = stored.find(k);
    if (it != stored.end() && it->second == e.value) {
      ++r.stored;
    } else {
      ++r.missing;
      if (!evicted.count(k)) ++r.silent_loss;
    }
  }
  std::set<std::string> servers;
  for (const auto& a : agents) servers.insert(a.server);
  for (const auto& [k, _] : stored) {
    if (servers.count(std::get<0>(k)) && !ledger_keys.count(k)) ++r.unexpected;
  }
  r.ledger_digest = hex_digest(ledger_text(r.ledger));
  r.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - wall_start).count();
  return r;
}

}  // namespace miniops::fleetsim
