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

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "miniops/common/clock.hpp"
#include "miniops/common/json.hpp"

namespace miniops::fleetsim {

enum class GeneratorType { random_walk, linear_ramp, sinusoid, constant };

const char* to_string(GeneratorType t);

struct GeneratorSpec {
  GeneratorType type = GeneratorType::constant;
  double start = 0.0;          // random_walk, linear_ramp
  double step = 1.0;           // random_walk: each tick moves by U(-step, step)
  double slope_per_day = 0.0;  // linear_ramp
  double base = 0.0;           // sinusoid
  double amplitude = 1.0;      // sinusoid
  double period_s = 60.0;      // sinusoid
  double value = 0.0;          // constant
  double noise = 0.0;          // every type: adds U(-noise, noise)

  friend bool operator==(const GeneratorSpec&, const GeneratorSpec&) = default;
};

struct MetricSpec {
  std::string name;
  GeneratorSpec generator;

  friend bool operator==(const MetricSpec&, const MetricSpec&) = default;
};

enum class FaultType { ingester_outage, agent_pause };

struct Fault {
  FaultType type = FaultType::ingester_outage;
  EpochMs start_ms = 0;  // offsets from the scenario start, [start, end)
  EpochMs end_ms = 0;
  std::vector<std::string> scope;  // agent_pause: server ids, empty = all

  friend bool operator==(const Fault&, const Fault&) = default;
};

struct Scenario {
  std::uint64_t seed = 1;
  int servers = 10;
  std::vector<MetricSpec> metrics;                         // every server
  std::map<std::string, std::vector<MetricSpec>> overrides;  // server id -> its own metric list
  EpochMs tick_ms = 1000;
  EpochMs duration_ms = 60'000;
  std::vector<Fault> faults;
  std::size_t spool_capacity = 1000;
  EpochMs batch_interval_ms = 10'000;
  EpochMs start_ms = 1'699'920'000'000;  // a UTC midnight
  double accel = 0.0;  // virtual ms per wall ms; 0 runs as fast as possible
  EpochMs drain_limit_ms = 600'000;
  int parallelism = 4;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

// Error(invalid_argument) on inconsistent fields or faults outside the duration.
void validate(const Scenario& s);
Json scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const Json& j);  // validates

std::string server_name(int index);  // sim-000, sim-001, ...
const std::vector<MetricSpec>& metrics_for(const Scenario& s, const std::string& server);

// Deterministic value of one series at tick k. random_walk needs the previous
// level, so callers step it in tick order through SeriesGenerator.
class SeriesGenerator {
 public:
  SeriesGenerator(std::uint64_t seed, const std::string& server, const MetricSpec& metric, EpochMs start_ms,
                  EpochMs tick_ms);
  double at(EpochMs ts);

 private:
  double uniform(std::uint64_t k, std::uint64_t salt, double half_width) const;

  std::uint64_t key_;
  GeneratorSpec spec_;
  EpochMs start_ms_;
  EpochMs tick_ms_;
  std::vector<double> walk_;  // random_walk levels by tick
};

// A free-space series draining linearly from start; Error(invalid_argument) unless slope < 0.
MetricSpec scripted_saturation(const std::string& name, double slope_per_day, double start, double noise = 0.0);
// Days from the scenario start until the drain reaches zero.
double saturation_day(double slope_per_day, double start);

}  // namespace miniops::fleetsim
