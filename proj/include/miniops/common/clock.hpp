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

#include <atomic>
#include <cstdint>

namespace miniops {

using EpochMs = std::int64_t;

inline constexpr EpochMs kMsPerSecond = 1000;
inline constexpr EpochMs kMsPerMinute = 60 * kMsPerSecond;
inline constexpr EpochMs kMsPerHour = 60 * kMsPerMinute;
inline constexpr EpochMs kMsPerDay = 24 * kMsPerHour;

class Clock {
 public:
  virtual ~Clock() = default;
  virtual EpochMs now_ms() const = 0;
};

class SystemClock final : public Clock {
 public:
  EpochMs now_ms() const override;
};

/// Virtual time, advanced explicitly. Used by the simulator and tests.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(EpochMs start = 0) : now_(start) {}

  EpochMs now_ms() const override { return now_.load(std::memory_order_acquire); }
  void set(EpochMs t) { now_.store(t, std::memory_order_release); }
  void advance(EpochMs delta) { now_.fetch_add(delta, std::memory_order_acq_rel); }

 private:
  std::atomic<EpochMs> now_;
};

const Clock& system_clock();

}  // namespace miniops
