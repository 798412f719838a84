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

// miniops: admin CLI over the gateway, plus `serve` (whole stack + gateway in one
// process) and `sim run` (scenario against a private in-process stack).
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "miniops/common/error.hpp"
#include "miniops/common/http.hpp"
#include "miniops/fleetsim/simulator.hpp"
#include "miniops/gateway/gateway.hpp"
#include "miniops/stack/stack.hpp"

namespace {

using miniops::Json;

constexpr int kOk = 0;
constexpr int kUserError = 1;
constexpr int kTransportError = 2;

struct Exit {
  int code;
  std::string message;
};

struct Globals {
  std::string gateway;
  std::string token;
  bool json = false;
};

std::string default_gateway() {
  if (const char* a = std::getenv("MINIOPS_GATEWAY_ADDR"); a && *a) {
    std::string s = a;
    return s.find("://") == std::string::npos ? "http://" + s : s;
  }
  return "http://127.0.0.1:8080";
}

// One request through the gateway. 4xx is the caller's fault, 5xx and no
// connection are transport failures.
Json call(const Globals& g, const std::string& method, const std::string& path, const Json* body = nullptr) {
  const auto ep = miniops::http::parse_url(g.gateway);
  httplib::Client c(ep.host, ep.port);
  c.set_connection_timeout(std::chrono::seconds(5));
  c.set_read_timeout(std::chrono::seconds(60));
  httplib::Headers h;
  if (!g.token.empty()) h.emplace("Authorization", "Bearer " + g.token);
  const std::string payload = body ? body->dump() : "";
  httplib::Result r = method == "GET"      ? c.Get(path, h)
                      : method == "DELETE" ? c.Delete(path, h)
                                           : c.Post(path, h, payload, "application/json");
  if (!r) throw Exit{kTransportError, "cannot reach gateway at " + g.gateway + ": " + httplib::to_string(r.error())};
  Json out;
  try {
    out = Json::parse(r->body);
  } catch (const Json::exception&) {
    out = Json{{"error", r->body}};
  }
  if (r->status >= 500) throw Exit{kTransportError, "HTTP " + std::to_string(r->status) + ": " + out.value("error", r->body)};
  if (r->status >= 400) throw Exit{kUserError, "HTTP " + std::to_string(r->status) + ": " + out.value("error", r->body)};
  return out;
}

std::string encode(const std::string& s) {
  std::string out;
  char buf[4];
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      std::snprintf(buf, sizeof buf, "%%%02X", c);
      out += buf;
    }
  }
  return out;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Exit{kUserError, "cannot read " + path};
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Exit{kUserError, path + ": " + e.what()};
  }
}

std::string cell(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "-";
  return v.dump();
}

// Left-aligned columns, widths from the content.
void print_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> w(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) w[i] = header[i].size();
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size() && i < w.size(); ++i) w[i] = std::max(w[i], r[i].size());
  auto line = [&](const std::vector<std::string>& r) {
    std::string s;
    for (std::size_t i = 0; i < r.size(); ++i) {
      s += r[i];
      if (i + 1 < r.size()) s += std::string(w[i] - r[i].size() + 2, ' ');
    }
    std::cout << s << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
}

void emit(const Globals& g, const Json& j, const std::function<void()>& human) {
  if (g.json) std::cout << j.dump(2) << '\n';
  else human();
}

void print_ticket(const Json& t) {
  std::cout << cell(t["ticket_id"]) << "  " << cell(t["title"]) << '\n'
            << "  status " << cell(t["status"]) << ", severity " << cell(t["severity"]) << ", team " << cell(t["team"])
            << ", assignee " << cell(t["assignee"]) << ", revision " << cell(t["revision"]) << '\n';
  for (const auto& [k, v] : t["attributes"].items()) std::cout << "  " << k << ": " << cell(v) << '\n';
  if (!t["description"].get<std::string>().empty()) std::cout << "  " << cell(t["description"]) << '\n';
  for (const auto& c : t["comments"]) {
    std::cout << "  [" << cell(c["ts"]) << "] " << cell(c["author"]) << ": " << cell(c["text"]) << '\n';
  }
}

void print_tickets(const Json& list) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& t : list) {
    rows.push_back({cell(t["ticket_id"]), cell(t["severity"]), cell(t["status"]), cell(t["team"]), cell(t["title"])});
  }
  print_table({"TICKET", "SEVERITY", "STATUS", "TEAM", "TITLE"}, rows);
}

std::atomic<bool> g_stop{false};
void on_signal(int) { g_stop = true; }

int serve(const std::string& data_dir, const std::string& addr, const std::string& static_dir,
          const std::vector<std::string>& cors, miniops::EpochMs eval_ms) {
  miniops::gateway::GatewayConfig gc;
  miniops::gateway::apply_env(gc);
  if (!addr.empty()) {
    const auto ep = miniops::http::parse_url(addr);
    gc.host = ep.host;
    gc.port = ep.port;
  }
  if (gc.token.empty()) throw Exit{kUserError, "MINIOPS_TOKEN must be set to serve"};
  gc.cors_origins = cors;
  if (!static_dir.empty()) gc.static_dir = static_dir;

  miniops::stack::StackOptions so;
  so.data_dir = data_dir;
  std::filesystem::create_directories(so.data_dir);
  miniops::stack::Stack stack(so);
  stack.serve(gc.host);
  gc.upstreams = stack.urls();
  miniops::gateway::Gateway gw(gc);
  gw.start();
  stack.consumer.start();

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "gateway " << gw.url() << '\n';
  for (const auto& [name, url] : stack.urls()) std::cout << "  " << name << " " << url << '\n';
  std::cout.flush();
  while (!g_stop) {
    stack.alerts.tick(stack.clock().now_ms());
    for (miniops::EpochMs slept = 0; slept < eval_ms && !g_stop; slept += 100) {
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
  }
  gw.stop();
  stack.consumer.stop();
  stack.stop_all();
  return kOk;
}

int sim_run(const Globals& g, const std::string& file, double accel, const std::string& report_path, bool keep) {
  miniops::fleetsim::Scenario s;
  try {
    s = miniops::fleetsim::scenario_from_json(read_json_file(file));
  } catch (const miniops::Error& e) {
    throw Exit{kUserError, file + ": " + e.what()};
  }
  if (accel > 0) s.accel = accel;

  std::string tmpl = (std::filesystem::temp_directory_path() / "miniops-sim-XXXXXX").string();
  if (!mkdtemp(tmpl.data())) throw Exit{kUserError, "cannot create a scratch directory"};
  const std::filesystem::path dir = tmpl;
  miniops::fleetsim::Report r;
  {
    miniops::ManualClock clock(s.start_ms);
    miniops::stack::StackOptions so;
    so.data_dir = dir;
    so.sync = false;
    so.volatile_stores = true;
    miniops::stack::Stack stack(so, clock);
    stack.serve();
    r = miniops::fleetsim::Simulator(stack, clock).run(s);
  }
  if (!keep) std::filesystem::remove_all(dir);

  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) throw Exit{kUserError, "cannot write " + report_path};
    out << miniops::fleetsim::report_to_json(r, true).dump(2) << '\n';
  }
  emit(g, miniops::fleetsim::report_to_json(r), [&] {
    std::cout << "produced " << r.produced << ", stored " << r.stored << ", missing " << r.missing << " (evicted "
              << r.records_evicted << ", silent " << r.silent_loss << "), unexpected " << r.unexpected << '\n'
              << "batches sealed " << r.batches_sealed << ", acked " << r.batches_acked << ", evicted "
              << r.batches_evicted << ", left in spool " << r.spool_left << '\n'
              << "ledger " << r.ledger_digest << ", wall " << r.wall_ms << " ms\n";
  });
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  Globals g;
  g.gateway = default_gateway();
  if (const char* t = std::getenv("MINIOPS_TOKEN")) g.token = t;

  CLI::App app{"miniops: fleet, alerting and incident administration through the gateway"};
  app.require_subcommand(1);
  app.add_option("--gateway", g.gateway, "gateway base url")->capture_default_str();
  app.add_option("--token", g.token, "bearer token (default $MINIOPS_TOKEN)");
  app.add_flag("--json", g.json, "machine-readable output");

  std::function<int()> action;

  // fleet
  auto* fleet = app.add_subcommand("fleet", "agents, templates and targets");
  fleet->callback([&] {
    if (!fleet->get_subcommands().empty()) return;
    action = [&] {
      const Json j = call(g, "GET", "/api/agents");
      emit(g, j, [&] {
        std::vector<std::vector<std::string>> rows;
        for (const auto& a : j["agents"]) {
          rows.push_back({cell(a["server_id"]), cell(a["role"]), cell(a["client_name"]), cell(a["version"]),
                          cell(a["last_seen"])});
        }
        print_table({"SERVER", "ROLE", "CLIENT", "VERSION", "LAST_SEEN"}, rows);
      });
      return kOk;
    };
  });
  std::string agent_id, template_file, template_id, selector;
  auto* fleet_tasks = fleet->add_subcommand("tasks", "compiled task set of one agent");
  fleet_tasks->add_option("agent", agent_id)->required();
  fleet_tasks->callback([&] {
    action = [&] {
      const Json j = call(g, "GET", "/api/agents/" + encode(agent_id) + "/tasks");
      emit(g, j, [&] { std::cout << j.dump(2) << '\n'; });
      return kOk;
    };
  });
  auto* fleet_plan = fleet->add_subcommand("plan", "plan a task template from a JSON file");
  fleet_plan->add_option("file", template_file)->required();
  fleet_plan->callback([&] {
    action = [&] {
      const Json body = read_json_file(template_file);
      const Json j = call(g, "POST", "/api/templates", &body);
      emit(g, j, [&] { std::cout << "affected " << j["affected"].size() << " agents\n"; });
      return kOk;
    };
  });
  auto* fleet_unplan = fleet->add_subcommand("unplan", "remove a task template");
  fleet_unplan->add_option("template", template_id)->required();
  fleet_unplan->callback([&] {
    action = [&] {
      const Json j = call(g, "DELETE", "/api/templates/" + encode(template_id));
      emit(g, j, [&] { std::cout << "affected " << j["affected"].size() << " agents\n"; });
      return kOk;
    };
  });
  auto* fleet_targets = fleet->add_subcommand("targets", "servers matching a selector such as role=db,client!=acme");
  fleet_targets->add_option("selector", selector)->required();
  fleet_targets->callback([&] {
    action = [&] {
      const Json body{{"text", selector}};
      const Json j = call(g, "POST", "/api/targets", &body);
      emit(g, j, [&] {
        for (const auto& s : j["servers"]) std::cout << cell(s) << '\n';
      });
      return kOk;
    };
  });

  // alerts
  auto* alerts = app.add_subcommand("alerts", "alert rules and instances");
  alerts->require_subcommand(1);
  std::string alert_state, rule_file, rule_id;
  std::optional<std::int64_t> test_now;
  auto* alerts_list = alerts->add_subcommand("list", "alert instances");
  alerts_list->add_option("--state", alert_state, "pending, firing or resolved");
  alerts_list->callback([&] {
    action = [&] {
      const Json j = call(g, "GET", "/api/alerts" + (alert_state.empty() ? "" : "?state=" + encode(alert_state)));
      emit(g, j, [&] {
        std::vector<std::vector<std::string>> rows;
        for (const auto& a : j["alerts"]) {
          rows.push_back({cell(a["rule_id"]), cell(a["group_key"]), cell(a["state"]), cell(a["severity"]),
                          cell(a["last_value"]), cell(a["fired_at"])});
        }
        print_table({"RULE", "GROUP", "STATE", "SEVERITY", "VALUE", "FIRED_AT"}, rows);
      });
      return kOk;
    };
  });
  auto* alerts_rules = alerts->add_subcommand("rules", "list rules");
  alerts_rules->callback([&] {
    action = [&] {
      const Json j = call(g, "GET", "/api/rules");
      emit(g, j, [&] {
        std::vector<std::vector<std::string>> rows;
        for (const auto& r : j["rules"]) {
          rows.push_back({cell(r["rule_id"]), cell(r["comparator"]), cell(r["threshold"]), cell(r["severity"]),
                          cell(r["source"])});
        }
        print_table({"RULE", "CMP", "THRESHOLD", "SEVERITY", "SOURCE"}, rows);
      });
      return kOk;
    };
  });
  auto* alerts_put = alerts->add_subcommand("put", "create or replace a rule from a JSON file");
  alerts_put->add_option("file", rule_file)->required();
  alerts_put->callback([&] {
    action = [&] {
      const Json body = read_json_file(rule_file);
      const Json j = call(g, "POST", "/api/rules", &body);
      emit(g, j, [&] { std::cout << "saved " << cell(j["rule_id"]) << '\n'; });
      return kOk;
    };
  });
  auto* alerts_delete = alerts->add_subcommand("delete", "delete a rule");
  alerts_delete->add_option("rule", rule_id)->required();
  alerts_delete->callback([&] {
    action = [&] {
      const Json j = call(g, "DELETE", "/api/rules/" + encode(rule_id));
      emit(g, j, [&] { std::cout << "deleted " << rule_id << '\n'; });
      return kOk;
    };
  });
  auto* alerts_test = alerts->add_subcommand("test", "dry-run a rule file without side effects");
  alerts_test->add_option("file", rule_file)->required();
  alerts_test->add_option("--now", test_now, "evaluation time, epoch ms");
  alerts_test->callback([&] {
    action = [&] {
      Json body{{"rule", read_json_file(rule_file)}};
      if (test_now) body["now"] = *test_now;
      const Json j = call(g, "POST", "/api/rules/test", &body);
      emit(g, j, [&] {
        if (j["transitions"].empty()) std::cout << "no transitions\n";
        for (const auto& t : j["transitions"]) {
          std::cout << cell(t["group_key"]) << ": " << cell(t["from"]) << " -> " << cell(t["to"]) << " (value "
                    << cell(t["value"]) << ")\n";
        }
      });
      return kOk;
    };
  });

  // tickets
  auto* tickets = app.add_subcommand("tickets", "incident tickets");
  tickets->require_subcommand(1);
  std::string team, status, text, ticket_id, author = "cli", to, assignee;
  std::optional<std::int64_t> revision;
  auto* tickets_list = tickets->add_subcommand("list", "list tickets, or a team's ranked queue with --team");
  tickets_list->add_option("--team", team);
  tickets_list->add_option("--status", status);
  tickets_list->add_option("--q", text, "substring of title or description");
  tickets_list->callback([&] {
    action = [&] {
      Json j;
      if (!team.empty() && status.empty() && text.empty()) {
        j = call(g, "GET", "/api/teams/" + encode(team) + "/queue");
      } else {
        std::string q;
        if (!team.empty()) q += "&team=" + encode(team);
        if (!status.empty()) q += "&status=" + encode(status);
        if (!text.empty()) q += "&q=" + encode(text);
        if (!q.empty()) q[0] = '?';
        j = call(g, "GET", "/api/tickets" + q);
      }
      emit(g, j, [&] { print_tickets(j["tickets"]); });
      return kOk;
    };
  });
  auto* tickets_show = tickets->add_subcommand("show", "one ticket with its comments");
  tickets_show->add_option("ticket", ticket_id)->required();
  tickets_show->callback([&] {
    action = [&] {
      const Json j = call(g, "GET", "/api/tickets/" + encode(ticket_id));
      emit(g, j, [&] { print_ticket(j); });
      return kOk;
    };
  });
  auto* tickets_comment = tickets->add_subcommand("comment", "append a comment");
  tickets_comment->add_option("ticket", ticket_id)->required();
  tickets_comment->add_option("text", text)->required();
  tickets_comment->add_option("--author", author)->capture_default_str();
  tickets_comment->add_option("--revision", revision, "fail with a conflict unless the ticket is at this revision");
  tickets_comment->callback([&] {
    action = [&] {
      Json body{{"author", author}, {"text", text}};
      if (revision) body["revision"] = *revision;
      const Json j = call(g, "POST", "/api/tickets/" + encode(ticket_id) + "/comments", &body);
      emit(g, j, [&] { std::cout << cell(j["ticket_id"]) << " revision " << cell(j["revision"]) << '\n'; });
      return kOk;
    };
  });
  auto* tickets_move = tickets->add_subcommand("move", "change a ticket's status");
  tickets_move->add_option("ticket", ticket_id)->required();
  tickets_move->add_option("status", to, "triaged, in_progress, resolved or closed")->required();
  tickets_move->add_option("--actor", author)->capture_default_str();
  tickets_move->add_option("--revision", revision);
  tickets_move->callback([&] {
    action = [&] {
      Json body{{"status", to}, {"actor", author}};
      if (revision) body["revision"] = *revision;
      const Json j = call(g, "POST", "/api/tickets/" + encode(ticket_id) + "/transition", &body);
      emit(g, j, [&] { std::cout << cell(j["ticket_id"]) << " is " << cell(j["status"]) << '\n'; });
      return kOk;
    };
  });
  auto* tickets_assign = tickets->add_subcommand("assign", "assign a ticket");
  tickets_assign->add_option("ticket", ticket_id)->required();
  tickets_assign->add_option("assignee", assignee)->required();
  tickets_assign->callback([&] {
    action = [&] {
      Json body{{"assignee", assignee}};
      const Json j = call(g, "POST", "/api/tickets/" + encode(ticket_id) + "/assign", &body);
      emit(g, j, [&] { std::cout << cell(j["ticket_id"]) << " assigned to " << cell(j["assignee"]) << '\n'; });
      return kOk;
    };
  });

  // query
  std::string sql;
  auto* query = app.add_subcommand("query", "run a mini-SQL query");
  query->add_option("sql", sql)->required();
  query->callback([&] {
    action = [&] {
      const Json body{{"sql", sql}};
      const Json j = call(g, "POST", "/api/query", &body);
      emit(g, j, [&] {
        std::vector<std::vector<std::string>> rows;
        for (const auto& r : j["rows"]) {
          std::vector<std::string> cells;
          for (const auto& c : r) cells.push_back(cell(c));
          rows.push_back(std::move(cells));
        }
        std::vector<std::string> header;
        for (const auto& c : j["columns"]) header.push_back(c.get<std::string>());
        print_table(header, rows);
        std::cout << "(" << rows.size() << " rows)\n";
      });
      return kOk;
    };
  });

  // sim
  auto* sim = app.add_subcommand("sim", "fleet simulation");
  sim->require_subcommand(1);
  std::string scenario_file, report_path;
  double accel = 0;
  bool keep = false;
  auto* sim_run_cmd = sim->add_subcommand("run", "run a scenario file against a private in-process stack");
  sim_run_cmd->add_option("scenario", scenario_file)->required();
  sim_run_cmd->add_option("--accel", accel, "virtual ms per wall ms; 0 runs flat out");
  sim_run_cmd->add_option("--report", report_path, "write the full report with its ledger here");
  sim_run_cmd->add_flag("--keep", keep, "keep the scratch data directory");
  sim_run_cmd->callback([&] { action = [&] { return sim_run(g, scenario_file, accel, report_path, keep); }; });

  // health
  auto* health = app.add_subcommand("health", "subsystem status through the gateway");
  health->callback([&] {
    action = [&] {
      const Json j = call(g, "GET", "/api/health");
      emit(g, j, [&] {
        std::cout << "status " << cell(j["status"]) << '\n';
        for (const auto& [name, st] : j["subsystems"].items()) std::cout << "  " << name << " " << cell(st) << '\n';
        for (const auto& [topic, groups] : j["queue_lag"].items())
          for (const auto& [group, lag] : groups.items())
            std::cout << "  lag " << topic << "/" << group << " " << cell(lag) << '\n';
        std::cout << "  store partitions " << cell(j["store_partitions"]) << '\n';
      });
      return cell(j["status"]) == "ok" ? kOk : kTransportError;
    };
  });

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "run every service and the gateway in this process");
  std::string data_dir = "./miniops-data", addr, static_dir;
  std::vector<std::string> cors;
  miniops::EpochMs eval_ms = 1000;
  serve_cmd->add_option("--data-dir", data_dir)->capture_default_str();
  serve_cmd->add_option("--addr", addr, "gateway host:port (default $MINIOPS_GATEWAY_ADDR or 127.0.0.1:8080)");
  serve_cmd->add_option("--static-dir", static_dir, "console assets served at /");
  serve_cmd->add_option("--cors-origin", cors, "allowed browser origin (repeatable)");
  serve_cmd->add_option("--eval-ms", eval_ms, "alert engine tick period")->capture_default_str();
  serve_cmd->callback([&] { action = [&] { return serve(data_dir, addr, static_dir, cors, eval_ms); }; });

  // routes
  bool markdown = false;
  auto* routes = app.add_subcommand("routes", "gateway route listing");
  routes->add_flag("--markdown", markdown);
  routes->callback([&] {
    action = [&] {
      if (markdown) std::cout << miniops::gateway::routes_markdown();
      else if (g.json) std::cout << miniops::gateway::routes_json().dump(2) << '\n';
      else
        for (const auto& r : miniops::gateway::routes())
          std::cout << r.method << ' ' << r.path << "  -> " << r.upstream << (r.mutating ? "  [token]" : "") << '\n';
      return kOk;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUserError;
  }

  try {
    return action ? action() : kUserError;
  } catch (const Exit& e) {
    if (g.json) std::cout << Json{{"error", e.message}, {"exit", e.code}}.dump() << '\n';
    std::cerr << "error: " << e.message << '\n';
    return e.code;
  } catch (const miniops::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return miniops::http_status(e.code()) >= 500 ? kTransportError : kUserError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kTransportError;
  }
}
