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

#include "miniops/agent/task.hpp"

#include "miniops/common/error.hpp"

namespace miniops::agent {

const char* to_string(TaskKind k) {
  switch (k) {
    case TaskKind::exec: return "exec";
    case TaskKind::http_probe: return "http_probe";
    case TaskKind::builtin_metric: return "builtin_metric";
  }
  return "?";
}

const char* to_string(ParseMode m) {
  switch (m) {
    case ParseMode::scalar: return "scalar";
    case ParseMode::lines: return "lines";
    case ParseMode::raw: return "raw";
  }
  return "?";
}

namespace {

[[noreturn]] void bad(const CollectionTask& t, const std::string& what) {
  throw Error(Errc::invalid_argument, "task '" + t.task_id + "': " + what);
}

ParseMode parse_mode(const std::string& s) {
  if (s == "scalar") return ParseMode::scalar;
  if (s == "lines") return ParseMode::lines;
  if (s == "raw") return ParseMode::raw;
  throw Error(Errc::invalid_argument, "unknown parse mode '" + s + "'");
}

}  // namespace

void validate(const CollectionTask& t) {
  if (t.task_id.empty()) throw Error(Errc::invalid_argument, "task_id must be non-empty");
  if (t.period_seconds < 1) bad(t, "period_seconds must be >= 1");
  if (t.jitter_seconds < 0 || t.jitter_seconds >= t.period_seconds) bad(t, "jitter_seconds must be in [0, period)");
  if (t.timeout_ms <= 0) bad(t, "timeout_ms must be positive");
  if (t.output_topic.empty()) bad(t, "output_topic must be non-empty");
  if (const auto* e = std::get_if<ExecSpec>(&t.spec)) {
    if (e->command.empty()) bad(t, "exec command must be non-empty");
    if (e->parse == ParseMode::scalar && t.output_kind != RecordKind::metric) bad(t, "scalar output is a metric");
    if (e->parse == ParseMode::raw && t.output_kind != RecordKind::log) bad(t, "raw output is a log");
  } else if (const auto* h = std::get_if<HttpProbeSpec>(&t.spec)) {
    if (h->url.empty()) bad(t, "probe url must be non-empty");
    if (h->method != "GET" && h->method != "HEAD") bad(t, "probe method must be GET or HEAD");
    if (h->timeout_ms <= 0) bad(t, "probe timeout must be positive");
    if (t.output_kind != RecordKind::metric) bad(t, "probes emit metrics");
  } else {
    if (std::get<BuiltinSpec>(t.spec).generator.empty()) bad(t, "generator must be non-empty");
    if (t.output_kind != RecordKind::metric) bad(t, "builtin generators emit metrics");
  }
}

Json task_to_json(const CollectionTask& t) {
  Json spec;
  if (const auto* e = std::get_if<ExecSpec>(&t.spec)) {
    spec = {{"command", e->command}, {"parse", to_string(e->parse)}};
  } else if (const auto* h = std::get_if<HttpProbeSpec>(&t.spec)) {
    spec = {{"url", h->url}, {"method", h->method}, {"timeout_ms", h->timeout_ms}};
  } else {
    spec = {{"generator", std::get<BuiltinSpec>(t.spec).generator}};
  }
  return {{"task_id", t.task_id},
          {"kind", to_string(t.kind())},
          {"spec", spec},
          {"name", t.name},
          {"schedule", {{"period_seconds", t.period_seconds}, {"jitter_seconds", t.jitter_seconds}}},
          {"timeout_ms", t.timeout_ms},
          {"output_topic", t.output_topic},
          {"output_kind", to_string(t.output_kind)}};
}

CollectionTask task_from_json(const Json& j) {
  CollectionTask t;
  try {
    t.task_id = j.at("task_id").get<std::string>();
    const auto kind = j.at("kind").get<std::string>();
    const Json& spec = j.at("spec");
    if (!spec.is_object()) throw Error(Errc::invalid_argument, "spec must be an object");
    if (kind == "exec") {
      t.spec = ExecSpec{spec.at("command").get<std::string>(), parse_mode(spec.value("parse", "scalar"))};
    } else if (kind == "http_probe") {
      t.spec = HttpProbeSpec{spec.at("url").get<std::string>(), spec.value("method", "GET"),
                             spec.value("timeout_ms", std::int64_t{2000})};
    } else if (kind == "builtin_metric") {
      t.spec = BuiltinSpec{spec.at("generator").get<std::string>()};
    } else {
      throw Error(Errc::invalid_argument, "unknown task kind '" + kind + "'");
    }
    t.name = j.value("name", "");
    const Json& sched = j.at("schedule");
    t.period_seconds = sched.at("period_seconds").get<std::int64_t>();
    t.jitter_seconds = sched.value("jitter_seconds", std::int64_t{0});
    t.timeout_ms = j.value("timeout_ms", std::int64_t{10'000});
    t.output_topic = j.value("output_topic", "metrics");
    const auto ok = j.value("output_kind", "metric");
    if (ok != "metric" && ok != "log") throw Error(Errc::invalid_argument, "output_kind must be metric or log");
    t.output_kind = ok == "metric" ? RecordKind::metric : RecordKind::log;
  } catch (const Json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("malformed task: ") + e.what());
  }
  validate(t);
  return t;
}

Json task_set_to_json(const TaskSet& s) {
  Json tasks = Json::array();
  for (const auto& t : s.tasks) tasks.push_back(task_to_json(t));
  return {{"version", s.version}, {"tasks", tasks}};
}

TaskSet task_set_from_json(const Json& j) {
  TaskSet s;
  try {
    s.version = j.at("version").get<std::int64_t>();
    for (const auto& t : j.at("tasks")) s.tasks.push_back(task_from_json(t));
  } catch (const Json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("malformed task set: ") + e.what());
  }
  return s;
}

}  // namespace miniops::agent
