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

#include "miniops/agent/runner.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/statvfs.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "miniops/common/error.hpp"
#include "miniops/common/http.hpp"

namespace miniops::agent {

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::ok: return "ok";
    case Outcome::timeout: return "timeout";
    case Outcome::exec_error: return "exec_error";
  }
  return "?";
}

namespace {

double proc_loadavg() {
  std::ifstream in("/proc/loadavg");
  double v = 0;
  if (!(in >> v)) throw Error(Errc::unavailable, "cannot read /proc/loadavg");
  return v;
}

double proc_mem_available() {
  std::ifstream in("/proc/meminfo");
  std::string key;
  double kb = 0;
  std::string unit;
  while (in >> key >> kb >> unit) {
    if (key == "MemAvailable:") return kb * 1024.0;
  }
  throw Error(Errc::unavailable, "MemAvailable missing from /proc/meminfo");
}

double disk_free(const char* path) {
  struct statvfs s {};
  if (::statvfs(path, &s) != 0) throw Error(Errc::unavailable, std::string("statvfs ") + path + ": " + strerror(errno));
  return static_cast<double>(s.f_bavail) * static_cast<double>(s.f_frsize);
}

double proc_count() {
  std::size_t n = 0;
  for (const auto& e : std::filesystem::directory_iterator("/proc")) {
    const auto name = e.path().filename().string();
    if (!name.empty() && name.find_first_not_of("0123456789") == std::string::npos) ++n;
  }
  return static_cast<double>(n);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_number(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) throw Error(Errc::invalid_argument, "empty output where a number was expected");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v)) {
    throw Error(Errc::invalid_argument, "cannot parse '" + t + "' as a number");
  }
  return v;
}

Record base_record(const CollectionTask& task, const std::string& server, EpochMs ts) {
  Record r;
  r.topic = task.output_topic;
  r.kind = task.output_kind;
  r.server = server;
  r.name = task.metric_name();
  r.ts = ts;
  return r;
}

struct ProcessResult {
  bool timed_out = false;
  int exit_status = 0;
  std::string out;
  std::string err;
};

ProcessResult run_shell(const std::string& command, std::int64_t timeout_ms) {
  int out_pipe[2], err_pipe[2];
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) throw Error(Errc::unavailable, "pipe failed");
  if (::pipe2(err_pipe, O_CLOEXEC) != 0) {
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    throw Error(Errc::unavailable, "pipe failed");
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw Error(Errc::unavailable, std::string("fork failed: ") + strerror(errno));
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::dup2(err_pipe[1], STDERR_FILENO);
    const int devnull = ::open("/dev/null", O_RDONLY);
    if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);

  ProcessResult r;
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
  int open_fds = 2;
  char buf[4096];
  while (open_fds > 0) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      r.timed_out = true;
      break;
    }
    const int n = ::poll(fds, 2, static_cast<int>(left.count()));
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) continue;
    for (int i = 0; i < 2; ++i) {
      if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      const ssize_t got = ::read(fds[i].fd, buf, sizeof buf);
      if (got > 0) {
        (i == 0 ? r.out : r.err).append(buf, static_cast<std::size_t>(got));
      } else if (got == 0 || errno != EINTR) {
        ::close(fds[i].fd);
        fds[i].fd = -1;
        --open_fds;
      }
    }
  }
  for (auto& f : fds) {
    if (f.fd >= 0) ::close(f.fd);
  }
  if (r.timed_out) ::kill(-pid, SIGKILL);
  int status = 0;
  // The pipes may close before the child exits; wait out the remainder of the budget.
  while (!r.timed_out) {
    const pid_t w = ::waitpid(pid, &status, WNOHANG);
    if (w == pid) break;
    if (std::chrono::steady_clock::now() >= deadline) {
      r.timed_out = true;
      ::kill(-pid, SIGKILL);
      break;
    }
    ::usleep(1000);
  }
  if (r.timed_out) {
    ::waitpid(pid, &status, 0);
    return r;
  }
  r.exit_status = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  return r;
}

struct UrlParts {
  std::string base;
  std::string path;
};

UrlParts split_url(const std::string& url) {
  const auto scheme = url.find("://");
  const auto host_start = scheme == std::string::npos ? 0 : scheme + 3;
  const auto slash = url.find('/', host_start);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

GeneratorRegistry::GeneratorRegistry() {
  generators_["cpu_load"] = [](EpochMs) { return proc_loadavg(); };
  generators_["mem_free_bytes"] = [](EpochMs) { return proc_mem_available(); };
  generators_["disk_free_bytes"] = [](EpochMs) { return disk_free("/"); };
  generators_["proc_count"] = [](EpochMs) { return proc_count(); };
}

void GeneratorRegistry::add(const std::string& name, Generator g) { generators_[name] = std::move(g); }

bool GeneratorRegistry::contains(const std::string& name) const { return generators_.contains(name); }

double GeneratorRegistry::sample(const std::string& name, EpochMs now) const {
  auto it = generators_.find(name);
  if (it == generators_.end()) throw Error(Errc::not_found, "unknown generator '" + name + "'");
  return it->second(now);
}

std::vector<Record> parse_output(const CollectionTask& task, const std::string& output, const std::string& server,
                                 EpochMs ts) {
  const ParseMode mode = std::get<ExecSpec>(task.spec).parse;
  std::vector<Record> out;
  if (mode == ParseMode::scalar) {
    Record r = base_record(task, server, ts);
    r.value = parse_number(output);
    out.push_back(std::move(r));
  } else if (mode == ParseMode::raw) {
    Record r = base_record(task, server, ts);
    r.level = "info";
    r.message = trim(output);
    if (r.message.empty()) throw Error(Errc::invalid_argument, "empty output");
    out.push_back(std::move(r));
  } else {
    std::istringstream in(output);
    std::string line;
    std::size_t index = 0;
    while (std::getline(in, line)) {
      line = trim(line);
      if (line.empty()) continue;
      Record r = base_record(task, server, ts);
      if (task.output_kind == RecordKind::log) {
        r.level = "info";
        r.message = line;
      } else {
        // "value" or "label value"
        const auto space = line.find_last_of(" \t");
        if (space == std::string::npos) {
          r.tags["line"] = std::to_string(index);
          r.value = parse_number(line);
        } else {
          r.tags["item"] = trim(line.substr(0, space));
          r.value = parse_number(line.substr(space + 1));
        }
      }
      out.push_back(std::move(r));
      ++index;
    }
  }
  return out;
}

TaskResult run_task(const CollectionTask& task, const Clock& clock, const RunContext& ctx) {
  TaskResult result;
  result.task_id = task.task_id;
  result.server_id = ctx.server_id;
  result.started_at = clock.now_ms();
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
  };
  auto error_log = [&](const std::string& message) {
    Record r;
    r.topic = ctx.error_topic;
    r.kind = RecordKind::log;
    r.server = ctx.server_id;
    r.name = task.task_id;
    r.ts = result.started_at;
    r.level = "error";
    r.message = message.empty() ? "task failed" : message;
    r.tags["task_id"] = task.task_id;
    return r;
  };

  if (const auto* e = std::get_if<ExecSpec>(&task.spec)) {
    ProcessResult p;
    try {
      p = run_shell(e->command, task.timeout_ms);
    } catch (const Error& err) {
      result.outcome = Outcome::exec_error;
      result.records.push_back(error_log(err.what()));
      result.duration_ms = elapsed();
      return result;
    }
    result.duration_ms = elapsed();
    if (p.timed_out) {
      result.outcome = Outcome::timeout;
      result.duration_ms = std::max<std::int64_t>(result.duration_ms, task.timeout_ms);
      return result;
    }
    if (p.exit_status != 0) {
      result.outcome = Outcome::exec_error;
      const std::string err = trim(p.err);
      result.records.push_back(error_log(err.empty() ? "exit status " + std::to_string(p.exit_status) : err));
      return result;
    }
    try {
      result.records = parse_output(task, p.out, ctx.server_id, result.started_at);
    } catch (const Error& err) {
      result.outcome = Outcome::exec_error;
      result.records = {error_log(std::string("parse failure: ") + err.what())};
    }
    return result;
  }

  if (const auto* h = std::get_if<HttpProbeSpec>(&task.spec)) {
    const UrlParts parts = split_url(h->url);
    bool reachable = false;
    try {
      httplib::Client cli(parts.base);
      const auto t = std::chrono::milliseconds(std::min(h->timeout_ms, task.timeout_ms));
      cli.set_connection_timeout(t);
      cli.set_read_timeout(t);
      cli.set_write_timeout(t);
      auto res = h->method == "HEAD" ? cli.Head(parts.path) : cli.Get(parts.path);
      reachable = static_cast<bool>(res);
    } catch (const std::exception&) {
      reachable = false;
    }
    result.duration_ms = elapsed();
    Record up = base_record(task, ctx.server_id, result.started_at);
    up.name = task.metric_name() + ".reachable";
    up.value = reachable ? 1.0 : 0.0;
    Record latency = base_record(task, ctx.server_id, result.started_at);
    latency.name = task.metric_name() + ".latency_ms";
    latency.value = static_cast<double>(result.duration_ms);
    result.records = {std::move(up), std::move(latency)};
    return result;
  }

  const auto& b = std::get<BuiltinSpec>(task.spec);
  static const GeneratorRegistry host_generators;
  const GeneratorRegistry& registry = ctx.generators ? *ctx.generators : host_generators;
  try {
    Record r = base_record(task, ctx.server_id, result.started_at);
    r.name = task.name.empty() ? b.generator : task.name;
    r.value = registry.sample(b.generator, result.started_at);
    if (!std::isfinite(r.value)) throw Error(Errc::invalid_argument, "generator produced a non-finite value");
    result.records.push_back(std::move(r));
  } catch (const Error& err) {
    result.outcome = Outcome::exec_error;
    result.records = {error_log(err.what())};
  }
  result.duration_ms = elapsed();
  return result;
}

}  // namespace miniops::agent
