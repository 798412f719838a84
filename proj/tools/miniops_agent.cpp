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

// miniops-agent: collector daemon for one server.
#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "miniops/agent/agent.hpp"
#include "miniops/common/error.hpp"

namespace {
std::atomic<bool> g_stop{false};
void on_signal(int) { g_stop = true; }
}  // namespace

int main(int argc, char** argv) {
  miniops::agent::AgentOptions o;
  std::string controlplane_url, ingester_url, spool_dir, role = "generic", client = "default";
  std::int64_t loop_ms = 100;

  CLI::App app{"miniops-agent: runs the collection tasks planned for this server"};
  app.add_option("--agent-id", o.agent_id, "server id this agent reports as")->required();
  app.add_option("--controlplane-url", controlplane_url)->required();
  app.add_option("--ingester-url", ingester_url)->required();
  app.add_option("--spool-dir", spool_dir, "durable spool location (in memory when omitted)");
  app.add_option("--spool-capacity", o.spool_capacity, "batches kept before the oldest is evicted")
      ->capture_default_str();
  app.add_option("--role", role)->capture_default_str();
  app.add_option("--client", client)->capture_default_str();
  app.add_option("--batch-interval-ms", o.batch_interval_ms)->capture_default_str();
  app.add_option("--config-poll-ms", o.config_poll_ms)->capture_default_str();
  app.add_option("--loop-ms", loop_ms)->capture_default_str();
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }
  if (!spool_dir.empty()) o.spool_dir = spool_dir;
  o.info.server_id = o.agent_id;
  o.info.role = role;
  o.info.client_name = client;

  try {
    miniops::agent::HttpTransport transport(ingester_url);
    miniops::agent::HttpControlPlaneClient controlplane(controlplane_url);
    miniops::agent::Agent agent(o, transport, &controlplane);
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);

    // the control plane may come up after us
    for (auto backoff = std::chrono::seconds(1); !g_stop;) {
      try {
        agent.register_self();
        break;
      } catch (const std::exception& e) {
        std::cerr << "register failed: " << e.what() << ", retrying in " << backoff.count() << " s\n";
        std::this_thread::sleep_for(backoff);
        backoff = std::min(backoff * 2, std::chrono::seconds(60));
      }
    }
    std::cout << "agent " << o.agent_id << " running" << std::endl;
    agent.run(g_stop, loop_ms);
    agent.wait_idle();
    const auto now = miniops::system_clock().now_ms();
    agent.seal(now);
    agent.flush(now);
    std::cout << "agent stopped, " << agent.spool().size() << " batches left in spool" << std::endl;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
