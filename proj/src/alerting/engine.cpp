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

#include "miniops/alerting/engine.hpp"

#include <algorithm>
#include <cstdio>

#include <httplib.h>

#include "miniops/common/error.hpp"

namespace miniops::alerting {

const char* to_string(AlertState s) {
  switch (s) {
    case AlertState::pending: return "pending";
    case AlertState::firing: return "firing";
    case AlertState::resolved: return "resolved";
  }
  return "?";
}

AlertState parse_alert_state(std::string_view name) {
  for (auto s : {AlertState::pending, AlertState::firing, AlertState::resolved}) {
    if (name == to_string(s)) return s;
  }
  throw Error(Errc::invalid_argument, "unknown alert state '" + std::string(name) + "'");
}

namespace {

Json opt_ms(const std::optional<EpochMs>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<EpochMs> opt_ms(const Json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<EpochMs>();
}

}  // namespace

Json instance_to_json(const AlertInstance& a) {
  return {{"instance_id", a.instance_id}, {"rule_id", a.rule_id},
          {"group_key", a.group_key},     {"group", a.group},
          {"state", to_string(a.state)},  {"first_breach_at", a.first_breach_at},
          {"fired_at", opt_ms(a.fired_at)}, {"resolved_at", opt_ms(a.resolved_at)},
          {"last_value", a.last_value},   {"severity", to_string(a.severity)}};
}

AlertInstance instance_from_json(const Json& j) {
  AlertInstance a;
  a.instance_id = j.at("instance_id").get<std::string>();
  a.rule_id = j.at("rule_id").get<std::string>();
  a.group_key = j.at("group_key").get<std::string>();
  a.group = j.value("group", TagMap{});
  a.state = parse_alert_state(j.at("state").get<std::string>());
  a.first_breach_at = j.at("first_breach_at").get<EpochMs>();
  a.fired_at = opt_ms(j, "fired_at");
  a.resolved_at = opt_ms(j, "resolved_at");
  a.last_value = j.value("last_value", 0.0);
  a.severity = severity_or_throw(j.value("severity", std::string("major")));
  return a;
}

Json transition_to_json(const Transition& t) {
  return {{"rule_id", t.rule_id},
          {"group_key", t.group_key},
          {"from", t.from ? Json(to_string(*t.from)) : Json(nullptr)},
          {"to", to_string(t.to)},
          {"at", t.at},
          {"value", t.value}};
}

std::string source_key(const AlertInstance& inst) {
  return inst.rule_id + "|" + inst.group_key + "|" + std::to_string(inst.fired_at.value_or(inst.first_breach_at));
}

// --- sources ---------------------------------------------------------------

void StoreSource::check() const {
  if (!available_) throw Error(Errc::unavailable, "metric store unavailable");
}

tsstore::QueryResult StoreSource::query(const tsstore::Query& q) const {
  check();
  return store_.query(q);
}

std::map<std::vector<std::string>, std::vector<Sample>> StoreSource::samples(const tsstore::Query& q) const {
  check();
  std::map<std::vector<std::string>, std::vector<Sample>> out;
  for (const auto& p : store_.scan(q.metric)) {
    if (p.ts < q.from || p.ts >= q.to) continue;
    const bool keep = std::all_of(q.filters.begin(), q.filters.end(), [&](const tsstore::TagFilter& f) {
      return p.series.has_tag(f.key) && p.series.tag(f.key) == f.value;
    });
    if (!keep) continue;
    std::vector<std::string> group;
    for (const auto& k : q.group_by) group.push_back(p.series.tag(k));
    out[group].push_back({p.ts, p.value});
  }
  for (auto& [_, v] : out) {
    std::stable_sort(v.begin(), v.end(), [](const Sample& a, const Sample& b) { return a.ts < b.ts; });
  }
  return out;
}

// --- dispatcher -----------------------------------------------------------

namespace {
constexpr const char* kOutbox = "outbox";
}

Json incident_request_to_json(const IncidentRequest& r) {
  return {{"source_key", r.source_key}, {"rule_id", r.rule_id},
          {"title", r.title},           {"description", r.description},
          {"severity", to_string(r.severity)}, {"team_hint", r.team_hint},
          {"attributes", r.attributes}};
}

IncidentRequest incident_request_from_json(const Json& j) {
  IncidentRequest r;
  r.source_key = j.at("source_key").get<std::string>();
  r.rule_id = j.value("rule_id", "");
  r.title = j.at("title").get<std::string>();
  r.description = j.value("description", "");
  r.severity = severity_or_throw(j.value("severity", std::string("major")));
  r.team_hint = j.value("team_hint", "");
  r.attributes = j.value("attributes", TagMap{});
  return r;
}

Dispatcher::Dispatcher(tsstore::MetadataStore& meta, ActionSink* sink) : meta_(meta), sink_(sink) {}

void Dispatcher::set_sink(ActionSink* sink) {
  std::lock_guard lock(mu_);
  sink_ = sink;
}

bool Dispatcher::enqueue(const std::string& key, Json entry) {
  std::lock_guard lock(mu_);
  if (meta_.get(kOutbox, key)) return false;
  entry["key"] = key;
  entry["attempts"] = 0;
  if (!entry.contains("done")) entry["done"] = false;
  meta_.put(kOutbox, key, entry);
  return true;
}

bool Dispatcher::enqueue_incident(const IncidentRequest& req) {
  return enqueue("incident|" + req.source_key, {{"kind", "incident"}, {"request", incident_request_to_json(req)}});
}

bool Dispatcher::enqueue_resolution(const std::string& source_key, EpochMs at) {
  return enqueue("resolve|" + source_key, {{"kind", "resolve"}, {"source_key", source_key}, {"at", at}});
}

bool Dispatcher::enqueue_log(const std::string& source_key, const std::string& text) {
  const bool fresh = enqueue("log|" + source_key, {{"kind", "log"}, {"text", text}, {"done", true}});
  if (fresh) {
    std::lock_guard lock(mu_);
    ++stats_.logged;
  }
  return fresh;
}

std::size_t Dispatcher::pump() {
  std::lock_guard lock(mu_);
  std::size_t completed = 0;
  const auto entries = meta_.list(kOutbox);
  for (auto [key, e] : entries) {
    if (e.value("done", false)) continue;
    const std::string kind = e.value("kind", "");
    if (kind == "resolve") {
      // The ticket must exist before its resolution note can attach to it.
      auto inc = entries.find("incident|" + e["source_key"].get<std::string>());
      if (inc != entries.end() && !meta_.get(kOutbox, inc->first)->value("done", false)) continue;
    }
    if (!sink_) {
      ++stats_.failures;
      continue;
    }
    try {
      if (kind == "incident") {
        e["ticket_id"] = sink_->create_incident(incident_request_from_json(e["request"]));
      } else if (kind == "resolve") {
        sink_->alert_resolved(e["source_key"].get<std::string>(), e["at"].get<EpochMs>());
      }
      e["done"] = true;
      ++stats_.delivered;
      ++completed;
    } catch (const std::exception& ex) {
      e["attempts"] = e.value("attempts", 0) + 1;
      e["last_error"] = ex.what();
      ++stats_.failures;
    }
    meta_.put(kOutbox, key, e);
  }
  return completed;
}

std::size_t Dispatcher::pending() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& [_, e] : meta_.list(kOutbox)) n += e.value("done", false) ? 0 : 1;
  return n;
}

std::vector<Json> Dispatcher::outbox() const {
  std::vector<Json> out;
  for (auto& [_, e] : meta_.list(kOutbox)) out.push_back(e);
  return out;
}

std::optional<std::string> Dispatcher::ticket_for(const std::string& key) const {
  auto e = meta_.get(kOutbox, "incident|" + key);
  if (!e || !e->contains("ticket_id")) return std::nullopt;
  return (*e)["ticket_id"].get<std::string>();
}

DispatchStats Dispatcher::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

HttpActionSink::HttpActionSink(std::string base_url, int timeout_ms)
    : base_url_(std::move(base_url)), timeout_ms_(timeout_ms) {}

namespace {

Json post_json(const std::string& base, int timeout_ms, const std::string& path, const Json& body) {
  httplib::Client cli(base);
  cli.set_connection_timeout(std::chrono::milliseconds(timeout_ms));
  cli.set_read_timeout(std::chrono::milliseconds(timeout_ms));
  auto res = cli.Post(path, body.dump(), "application/json");
  if (!res) throw Error(Errc::unavailable, "incidents service unreachable: " + httplib::to_string(res.error()));
  if (res->status >= 500) throw Error(Errc::unavailable, "incidents service returned " + std::to_string(res->status));
  if (res->status >= 400) throw Error(Errc::invalid_argument, "incidents service rejected: " + res->body);
  return Json::parse(res->body);
}

}  // namespace

std::string HttpActionSink::create_incident(const IncidentRequest& req) {
  Json body = incident_request_to_json(req);
  return post_json(base_url_, timeout_ms_, "/v1/alert-incidents", body).at("ticket_id").get<std::string>();
}

void HttpActionSink::alert_resolved(const std::string& key, EpochMs at) {
  post_json(base_url_, timeout_ms_, "/v1/alert-resolutions", {{"source_key", key}, {"at", at}});
}

// --- engine ---------------------------------------------------------------

namespace {
constexpr const char* kRules = "rules";
constexpr const char* kAlerts = "alerts";

std::string group_key_of(const std::vector<std::string>& keys, const std::vector<std::string>& values, TagMap& tags) {
  std::string gk;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    tags[keys[i]] = values[i];
    if (i) gk += ',';
    gk += keys[i] + "=" + values[i];
  }
  return gk;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) { return a / b - ((a % b != 0) && ((a < 0) != (b < 0))); }

}  // namespace

AlertEngine::AlertEngine(tsstore::MetadataStore& meta, const DataSource& source, Dispatcher& dispatcher,
                         const Clock& clock, std::unique_ptr<Forecaster> forecaster)
    : meta_(meta), source_(source), dispatcher_(dispatcher), clock_(clock), forecaster_(std::move(forecaster)) {
  if (!forecaster_) forecaster_ = std::make_unique<OlsForecaster>();
  for (const auto& [id, j] : meta_.list(kRules)) rules_[id] = rule_from_json(j);
  for (const auto& [_, j] : meta_.list(kAlerts)) {
    auto inst = instance_from_json(j);
    if (inst.state != AlertState::resolved) active_[{inst.rule_id, inst.group_key}] = inst;
  }
}

void AlertEngine::put_rule(const AlertRule& rule) {
  validate(rule);
  std::unique_lock lock(rules_mu_);
  meta_.put(kRules, rule.rule_id, rule_to_json(rule));
  rules_[rule.rule_id] = rule;
}

void AlertEngine::delete_rule(const std::string& rule_id) {
  {
    std::unique_lock lock(rules_mu_);
    if (!rules_.erase(rule_id)) throw Error(Errc::not_found, "unknown rule '" + rule_id + "'");
    meta_.erase(kRules, rule_id);
  }
  std::lock_guard lock(eval_mu_);
  std::vector<Transition> ignored;
  for (auto it = active_.begin(); it != active_.end();) {
    if (it->first.first != rule_id) {
      ++it;
      continue;
    }
    resolve(it->second, clock_.now_ms(), true, ignored);
    it = active_.erase(it);
  }
  last_eval_.erase(rule_id);
}

std::optional<AlertRule> AlertEngine::find_rule(const std::string& rule_id) const {
  std::shared_lock lock(rules_mu_);
  auto it = rules_.find(rule_id);
  if (it == rules_.end()) return std::nullopt;
  return it->second;
}

std::vector<AlertRule> AlertEngine::rules() const {
  std::shared_lock lock(rules_mu_);
  std::vector<AlertRule> out;
  for (const auto& [_, r] : rules_) out.push_back(r);
  return out;
}

std::map<std::string, AlertEngine::Observation> AlertEngine::observe(const AlertRule& rule, const tsstore::Query& q,
                                                                     EpochMs now) {
  std::map<std::string, Observation> obs;
  tsstore::Query w = q;
  w.to = std::min(q.to, now + 1);
  if (rule.forecast) {
    w.from = std::max(q.from, now - rule.forecast->window_ms);
    if (w.from >= w.to) return obs;
    // Fits run on raw points; the source's bucket only carries the grouping.
    for (const auto& [values, samples] : source_.samples(w)) {
      TagMap tags;
      const auto gk = group_key_of(q.group_by, values, tags);
      try {
        obs[gk] = {tags, forecaster_->days_to_saturation(samples, now, rule.forecast->capacity_bound)};
      } catch (const Error& e) {
        if (e.code() != Errc::invalid_argument) throw;
        ++stats_.forecast_skips;
      }
    }
    return obs;
  }
  w.from = std::max(q.from, now - rule.lookback_s * kMsPerSecond);
  if (w.from >= w.to) return obs;
  // Rows come ordered by (group, bucket), so the last row per group is the latest.
  for (const auto& row : source_.query(w).rows) {
    TagMap tags;
    const auto gk = group_key_of(q.group_by, row.group, tags);
    obs[gk] = {tags, row.value};
  }
  return obs;
}

void AlertEngine::persist(const AlertInstance& inst) { meta_.put(kAlerts, inst.instance_id, instance_to_json(inst)); }

void AlertEngine::fire(const AlertRule& rule, const std::string& metric, const AlertInstance& inst) {
  const std::string key = source_key(inst);
  for (const auto& a : rule.actions) {
    const std::string title = render_title(a.title, inst.group, metric, inst.last_value);
    if (a.type == ActionType::log_only) {
      dispatcher_.enqueue_log(key, title.empty() ? rule.rule_id + " firing" : title);
      continue;
    }
    IncidentRequest req;
    req.source_key = key;
    req.rule_id = rule.rule_id;
    req.title = title;
    req.description = "rule " + rule.rule_id + ": " + metric + " = " + fmt(inst.last_value) + " " +
                      to_string(rule.comparator) + " " + fmt(rule.threshold) +
                      (rule.forecast ? " days to saturation" : "");
    req.severity = rule.severity;
    req.team_hint = a.team_hint;
    auto attr = [&](const char* k, const std::string& fallback) {
      auto it = inst.group.find(k);
      return it != inst.group.end() && !it->second.empty() ? it->second : fallback;
    };
    req.attributes = {{"server", attr("server", "unknown")},
                      {"application", attr("application", metric)},
                      {"client", attr("client", "unknown")},
                      {"occurred_at", std::to_string(inst.first_breach_at)}};
    dispatcher_.enqueue_incident(req);
  }
  ++stats_.fired;
}

void AlertEngine::resolve(AlertInstance& inst, EpochMs now, bool commit, std::vector<Transition>& out) {
  out.push_back({inst.rule_id, inst.group_key, inst.state, AlertState::resolved, now, inst.last_value});
  const bool was_firing = inst.state == AlertState::firing;
  inst.state = AlertState::resolved;
  inst.resolved_at = now;
  if (!commit) return;
  persist(inst);
  ++stats_.resolved;
  if (was_firing) dispatcher_.enqueue_resolution(source_key(inst), now);
}

void AlertEngine::apply(const AlertRule& rule, const std::string& metric, Active& active,
                        const std::map<std::string, Observation>& obs, EpochMs now, bool commit,
                        std::vector<Transition>& out) {
  for (const auto& [gk, o] : obs) {
    const auto key = std::make_pair(rule.rule_id, gk);
    auto it = active.find(key);
    if (!compare(rule.comparator, o.value, rule.threshold)) {
      if (it == active.end()) continue;
      it->second.last_value = o.value;
      resolve(it->second, now, commit, out);
      active.erase(it);
      continue;
    }
    if (it == active.end()) {
      AlertInstance inst;
      inst.rule_id = rule.rule_id;
      inst.group_key = gk;
      inst.group = o.group;
      inst.first_breach_at = now;
      inst.instance_id = rule.rule_id + "|" + gk + "|" + std::to_string(now);
      inst.severity = rule.severity;
      it = active.emplace(key, inst).first;
      out.push_back({rule.rule_id, gk, std::nullopt, AlertState::pending, now, o.value});
    }
    auto& inst = it->second;
    inst.last_value = o.value;
    if (inst.state == AlertState::pending && now - inst.first_breach_at >= rule.for_duration_s * kMsPerSecond) {
      inst.state = AlertState::firing;
      inst.fired_at = now;
      out.push_back({rule.rule_id, gk, AlertState::pending, AlertState::firing, now, o.value});
      if (commit) fire(rule, metric, inst);
    }
    if (commit) persist(inst);
  }
}

std::vector<Transition> AlertEngine::evaluate(const AlertRule& rule, EpochMs now, bool dry_run) {
  const auto q = validate(rule);
  std::lock_guard lock(eval_mu_);
  std::vector<Transition> out;
  std::map<std::string, Observation> obs;
  try {
    obs = observe(rule, q, now);
  } catch (const Error& e) {
    if (e.code() != Errc::unavailable) throw;
    if (!dry_run) ++stats_.skipped;
    return out;
  }
  if (dry_run) {
    Active scratch;
    for (const auto& [k, v] : active_) {
      if (k.first == rule.rule_id) scratch.emplace(k, v);
    }
    apply(rule, q.metric, scratch, obs, now, false, out);
    return out;
  }
  ++stats_.evaluations;
  last_eval_[rule.rule_id] = now;
  apply(rule, q.metric, active_, obs, now, true, out);
  return out;
}

std::vector<Transition> AlertEngine::tick(EpochMs now) {
  std::vector<Transition> out;
  for (const auto& rule : rules()) {
    if (!rule.enabled) continue;
    bool due;
    {
      std::lock_guard lock(eval_mu_);
      auto it = last_eval_.find(rule.rule_id);
      const EpochMs p = rule.eval_every_s * kMsPerSecond;
      due = it == last_eval_.end() || floor_div(now, p) > floor_div(it->second, p);
    }
    if (!due) continue;
    auto t = evaluate(rule, now);
    out.insert(out.end(), t.begin(), t.end());
  }
  dispatcher_.pump();
  return out;
}

std::vector<AlertInstance> AlertEngine::instances(std::optional<AlertState> state) const {
  std::vector<AlertInstance> out;
  for (const auto& [_, j] : meta_.list(kAlerts)) {
    auto inst = instance_from_json(j);
    if (!state || inst.state == *state) out.push_back(std::move(inst));
  }
  return out;
}

EngineStats AlertEngine::stats() const {
  std::lock_guard lock(eval_mu_);
  return stats_;
}

}  // namespace miniops::alerting
