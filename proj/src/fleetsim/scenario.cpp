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

#include "miniops/fleetsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "miniops/common/error.hpp"

namespace miniops::fleetsim {

const char* to_string(GeneratorType t) {
  switch (t) {
    case GeneratorType::random_walk: return "random_walk";
    case GeneratorType::linear_ramp: return "linear_ramp";
    case GeneratorType::sinusoid: return "sinusoid";
    case GeneratorType::constant: return "constant";
  }
  return "?";
}

namespace {

GeneratorType parse_generator(const std::string& name) {
  for (auto t : {GeneratorType::random_walk, GeneratorType::linear_ramp, GeneratorType::sinusoid,
                 GeneratorType::constant}) {
    if (name == to_string(t)) return t;
  }
  throw Error(Errc::invalid_argument, "unknown generator '" + name + "'");
}

const char* fault_name(FaultType t) { return t == FaultType::ingester_outage ? "ingester_outage" : "agent_pause"; }

FaultType parse_fault(const std::string& name) {
  if (name == "ingester_outage") return FaultType::ingester_outage;
  if (name == "agent_pause") return FaultType::agent_pause;
  throw Error(Errc::invalid_argument, "unknown fault type '" + name + "'");
}

Json generator_to_json(const GeneratorSpec& g) {
  Json j{{"type", to_string(g.type)}};
  switch (g.type) {
    case GeneratorType::random_walk: j["start"] = g.start; j["step"] = g.step; break;
    case GeneratorType::linear_ramp: j["start"] = g.start; j["slope_per_day"] = g.slope_per_day; break;
    case GeneratorType::sinusoid:
      j["base"] = g.base;
      j["amplitude"] = g.amplitude;
      j["period_s"] = g.period_s;
      break;
    case GeneratorType::constant: j["value"] = g.value; break;
  }
  if (g.noise != 0.0) j["noise"] = g.noise;
  return j;
}

GeneratorSpec generator_from_json(const Json& j) {
  GeneratorSpec g;
  g.type = parse_generator(j.at("type").get<std::string>());
  g.start = j.value("start", 0.0);
  g.step = j.value("step", 1.0);
  g.slope_per_day = j.value("slope_per_day", j.value("slope", 0.0));
  g.base = j.value("base", 0.0);
  g.amplitude = j.value("amplitude", 1.0);
  g.period_s = j.value("period_s", j.value("period", 60.0));
  g.value = j.value("value", j.value("v", 0.0));
  g.noise = j.value("noise", 0.0);
  return g;
}

Json metrics_to_json(const std::vector<MetricSpec>& ms) {
  Json out = Json::array();
  for (const auto& m : ms) out.push_back({{"name", m.name}, {"generator", generator_to_json(m.generator)}});
  return out;
}

std::vector<MetricSpec> metrics_from_json(const Json& j) {
  std::vector<MetricSpec> out;
  for (const auto& m : j) out.push_back({m.at("name").get<std::string>(), generator_from_json(m.at("generator"))});
  return out;
}

void check_metrics(const std::vector<MetricSpec>& ms) {
  std::vector<std::string> seen;
  for (const auto& m : ms) {
    if (m.name.empty()) throw Error(Errc::invalid_argument, "metric name is required");
    if (std::find(seen.begin(), seen.end(), m.name) != seen.end()) {
      throw Error(Errc::invalid_argument, "duplicate metric '" + m.name + "'");
    }
    seen.push_back(m.name);
    const auto& g = m.generator;
    if (g.noise < 0 || g.step < 0) throw Error(Errc::invalid_argument, m.name + ": noise and step must be >= 0");
    if (g.type == GeneratorType::sinusoid && g.period_s <= 0) {
      throw Error(Errc::invalid_argument, m.name + ": sinusoid period must be positive");
    }
  }
}

}  // namespace

void validate(const Scenario& s) {
  if (s.servers < 1) throw Error(Errc::invalid_argument, "servers must be >= 1");
  if (s.tick_ms < 1000 || s.tick_ms % 1000 != 0) throw Error(Errc::invalid_argument, "tick_ms must be a whole number of seconds");
  if (s.duration_ms <= 0 || s.duration_ms % s.tick_ms != 0) {
    throw Error(Errc::invalid_argument, "duration_ms must be a positive multiple of tick_ms");
  }
  if (s.start_ms % s.tick_ms != 0) throw Error(Errc::invalid_argument, "start_ms must be aligned to tick_ms");
  if (s.batch_interval_ms <= 0) throw Error(Errc::invalid_argument, "batch_interval_ms must be positive");
  if (s.spool_capacity < 1) throw Error(Errc::invalid_argument, "spool_capacity must be >= 1");
  if (s.accel < 0) throw Error(Errc::invalid_argument, "accel must be >= 0");
  if (s.parallelism < 1) throw Error(Errc::invalid_argument, "parallelism must be >= 1");
  if (s.metrics.empty() && s.overrides.empty()) throw Error(Errc::invalid_argument, "no metrics configured");
  check_metrics(s.metrics);
  for (const auto& [server, ms] : s.overrides) check_metrics(ms);
  for (const auto& f : s.faults) {
    if (f.start_ms < 0 || f.end_ms <= f.start_ms || f.end_ms > s.duration_ms) {
      throw Error(Errc::invalid_argument, std::string(fault_name(f.type)) + " window must lie within the duration");
    }
  }
}

Json scenario_to_json(const Scenario& s) {
  Json overrides = Json::object();
  for (const auto& [server, ms] : s.overrides) overrides[server] = metrics_to_json(ms);
  Json faults = Json::array();
  for (const auto& f : s.faults) {
    faults.push_back({{"type", fault_name(f.type)}, {"start_ms", f.start_ms}, {"end_ms", f.end_ms}, {"scope", f.scope}});
  }
  return {{"seed", s.seed},
          {"servers", s.servers},
          {"metrics", metrics_to_json(s.metrics)},
          {"overrides", overrides},
          {"tick_ms", s.tick_ms},
          {"duration_ms", s.duration_ms},
          {"faults", faults},
          {"spool_capacity", s.spool_capacity},
          {"batch_interval_ms", s.batch_interval_ms},
          {"start_ms", s.start_ms},
          {"accel", s.accel},
          {"drain_limit_ms", s.drain_limit_ms},
          {"parallelism", s.parallelism}};
}

Scenario scenario_from_json(const Json& j) {
  Scenario s;
  try {
    s.seed = j.value("seed", std::uint64_t{1});
    s.servers = j.value("servers", 10);
    s.metrics = metrics_from_json(j.value("metrics", Json::array()));
    const Json overrides = j.value("overrides", Json::object());
    for (const auto& [server, ms] : overrides.items()) s.overrides[server] = metrics_from_json(ms);
    s.tick_ms = j.value("tick_ms", EpochMs{1000});
    s.duration_ms = j.value("duration_ms", EpochMs{60'000});
    for (const auto& f : j.value("faults", Json::array())) {
      s.faults.push_back({parse_fault(f.at("type").get<std::string>()), f.at("start_ms").get<EpochMs>(),
                          f.at("end_ms").get<EpochMs>(), f.value("scope", std::vector<std::string>{})});
    }
    s.spool_capacity = j.value("spool_capacity", std::size_t{1000});
    s.batch_interval_ms = j.value("batch_interval_ms", EpochMs{10'000});
    s.start_ms = j.value("start_ms", s.start_ms);
    s.accel = j.value("accel", 0.0);
    s.drain_limit_ms = j.value("drain_limit_ms", s.drain_limit_ms);
    s.parallelism = j.value("parallelism", 4);
  } catch (const Json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("bad scenario: ") + e.what());
  }
  validate(s);
  return s;
}

std::string server_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sim-%03d", index);
  return buf;
}

const std::vector<MetricSpec>& metrics_for(const Scenario& s, const std::string& server) {
  auto it = s.overrides.find(server);
  return it == s.overrides.end() ? s.metrics : it->second;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

SeriesGenerator::SeriesGenerator(std::uint64_t seed, const std::string& server, const MetricSpec& metric,
                                 EpochMs start_ms, EpochMs tick_ms)
    : key_(mix(seed ^ fnv1a(server + '\0' + metric.name))),
      spec_(metric.generator),
      start_ms_(start_ms),
      tick_ms_(tick_ms) {}

double SeriesGenerator::uniform(std::uint64_t k, std::uint64_t salt, double half_width) const {
  const double u = static_cast<double>(mix(key_ ^ mix(k * 2 + salt)) >> 11) * 0x1.0p-53;
  return -half_width + 2 * half_width * u;
}

double SeriesGenerator::at(EpochMs ts) {
  const EpochMs offset = ts - start_ms_;
  const auto k = static_cast<std::uint64_t>(std::max<EpochMs>(0, offset / tick_ms_));
  double v = 0.0;
  switch (spec_.type) {
    case GeneratorType::random_walk:
      while (walk_.size() <= k) {
        const double prev = walk_.empty() ? spec_.start : walk_.back();
        walk_.push_back(walk_.empty() ? prev : prev + uniform(walk_.size(), 0, spec_.step));
      }
      v = walk_[k];
      break;
    case GeneratorType::linear_ramp:
      v = spec_.start + spec_.slope_per_day * static_cast<double>(offset) / static_cast<double>(kMsPerDay);
      break;
    case GeneratorType::sinusoid:
      v = spec_.base + spec_.amplitude * std::sin(2 * std::numbers::pi * static_cast<double>(offset) / 1000.0 /
                                                  spec_.period_s);
      break;
    case GeneratorType::constant: v = spec_.value; break;
  }
  if (spec_.noise > 0) v += uniform(k, 1, spec_.noise);
  return v;
}

MetricSpec scripted_saturation(const std::string& name, double slope_per_day, double start, double noise) {
  if (!(slope_per_day < 0)) throw Error(Errc::invalid_argument, "a draining series needs a negative slope");
  MetricSpec m;
  m.name = name;
  m.generator.type = GeneratorType::linear_ramp;
  m.generator.start = start;
  m.generator.slope_per_day = slope_per_day;
  m.generator.noise = noise;
  return m;
}

double saturation_day(double slope_per_day, double start) {
  if (!(slope_per_day < 0)) throw Error(Errc::invalid_argument, "a draining series needs a negative slope");
  return start / -slope_per_day;
}

}  // namespace miniops::fleetsim
