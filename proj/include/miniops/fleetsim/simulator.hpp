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

#include <string>
#include <vector>

#include "miniops/common/record.hpp"
#include "miniops/fleetsim/scenario.hpp"
#include "miniops/stack/stack.hpp"

namespace miniops::fleetsim {

struct LedgerEntry {
  std::string server;
  std::string metric;
  EpochMs ts = 0;
  double value = 0.0;

  friend bool operator==(const LedgerEntry&, const LedgerEntry&) = default;
};

struct Report {
  std::vector<LedgerEntry> ledger;  // sorted by (server, metric, ts)
  std::uint64_t produced = 0;
  std::uint64_t batches_sealed = 0;
  std::uint64_t batches_acked = 0;
  std::uint64_t batches_evicted = 0;
  std::uint64_t records_evicted = 0;
  std::uint64_t stored = 0;       // ledger entries found in the store with the same value
  std::uint64_t missing = 0;      // ledger entries absent from the store
  std::uint64_t silent_loss = 0;  // missing entries that no eviction accounts for
  std::uint64_t unexpected = 0;   // stored points of scenario series not in the ledger
  std::uint64_t spool_left = 0;   // batches still undelivered after draining
  std::vector<Batch> evicted;
  std::int64_t wall_ms = 0;
  std::string ledger_digest;  // FNV-1a 64 of ledger_text, hex
};

// One line per entry: server,metric,ts,value with value printed round-trip exact.
std::string ledger_text(const std::vector<LedgerEntry>& ledger);
Json report_to_json(const Report& r, bool include_ledger = false);

/// Drives in-process agents against a running stack on a virtual clock. The stack
/// must have been built with the same clock and its ingester must be served over
/// HTTP. One scenario at a time.
class Simulator {
 public:
  Simulator(stack::Stack& stack, ManualClock& clock);

  // Error(unavailable) before producing anything when the ingester is unreachable.
  Report run(const Scenario& scenario);

 private:
  stack::Stack& stack_;
  ManualClock& clock_;
};

}  // namespace miniops::fleetsim
