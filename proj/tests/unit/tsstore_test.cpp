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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <thread>

#include "miniops/common/error.hpp"
#include "miniops/common/fsutil.hpp"
#include "miniops/common/rng.hpp"
#include "miniops/tsstore/gorilla.hpp"
#include "miniops/tsstore/log_store.hpp"
#include "miniops/tsstore/metadata_store.hpp"
#include "miniops/tsstore/segment.hpp"
#include "miniops/tsstore/sql.hpp"
#include "miniops/tsstore/store.hpp"
#include "support/query_oracle.hpp"
#include "support/sql_corpus.hpp"
#include "support/temp_dir.hpp"

namespace miniops::tsstore {
namespace {

using miniops::testing::OraclePoint;
using miniops::testing::oracle_eval;
using miniops::testing::TempDir;

std::uint64_t bits_of(double d) {
  std::uint64_t b;
  std::memcpy(&b, &d, sizeof b);
  return b;
}

MetricPoint pt(const std::string& name, const TagMap& tags, const std::string& server, EpochMs ts, double v) {
  return {SeriesKey(name, tags, server), ts, v};
}

// Near the epoch, so the retention floor never rejects the small timestamps used here.
const Clock& epoch_clock() {
  static ManualClock clock(0);
  return clock;
}

StoreOptions memory_options() {
  StoreOptions o;
  o.sync = false;
  return o;
}

// ---- codecs ----

TEST(Gorilla, VarintAndZigzagRoundTrip) {
  Rng rng(7);
  std::string buf;
  std::vector<std::uint64_t> values = {0, 1, 127, 128, 300, std::numeric_limits<std::uint64_t>::max()};
  for (int i = 0; i < 200; ++i) values.push_back(rng.next_u64() >> rng.uniform_int(0, 63));
  for (auto v : values) put_varint(buf, v);
  std::size_t pos = 0;
  for (auto v : values) EXPECT_EQ(get_varint(buf, pos), v);
  EXPECT_EQ(pos, buf.size());
  for (std::int64_t v : {std::int64_t{0}, std::int64_t{-1}, std::int64_t{1}, std::numeric_limits<std::int64_t>::min(),
                         std::numeric_limits<std::int64_t>::max()}) {
    EXPECT_EQ(unzigzag(zigzag(v)), v);
  }
  std::size_t p2 = 0;
  EXPECT_THROW(get_varint(std::string("\x80\x80", 2), p2), Error);
}

TEST(Gorilla, TimestampsRoundTripRandomCadences) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = static_cast<std::size_t>(rng.uniform_int(0, 400));
    std::vector<EpochMs> ts;
    EpochMs t = rng.uniform_int(-1'000'000'000'000, 2'000'000'000'000);
    const EpochMs period = rng.uniform_int(1, 120'000);
    for (std::size_t i = 0; i < n; ++i) {
      ts.push_back(t);
      // mostly steady, sometimes jittered, sometimes a huge gap
      EpochMs step = period;
      if (rng.coin(0.2)) step += rng.uniform_int(-period + 1, period);
      if (rng.coin(0.01)) step += rng.uniform_int(0, 1'000'000'000'000);
      t += step;
    }
    const std::string col = encode_timestamps(ts);
    EXPECT_EQ(decode_timestamps(col, ts.size()), ts) << "trial " << trial;
  }
}

TEST(Gorilla, SteadyCadenceCollapsesToAFewBytes) {
  std::vector<EpochMs> ts;
  for (int i = 0; i < 10000; ++i) ts.push_back(1'700'000'000'000 + i * 10'000);
  EXPECT_LE(encode_timestamps(ts).size(), 16u);
}

TEST(Gorilla, ValuesRoundTripBitExact) {
  Rng rng(13);
  std::vector<double> specials = {0.0, -0.0, 1.0, -1.0, std::numeric_limits<double>::min(),
                                  std::numeric_limits<double>::denorm_min(), std::numeric_limits<double>::max(),
                                  -std::numeric_limits<double>::max(), 1e-300, 3.141592653589793};
  {
    const std::string col = encode_values(specials);
    const auto back = decode_values(col, specials.size());
    ASSERT_EQ(back.size(), specials.size());
    for (std::size_t i = 0; i < specials.size(); ++i) EXPECT_EQ(bits_of(back[i]), bits_of(specials[i]));
  }
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 300));
    std::vector<double> v;
    double x = rng.uniform(-1e6, 1e6);
    for (std::size_t i = 0; i < n; ++i) {
      switch (rng.uniform_int(0, 3)) {
        case 0: break;                                  // repeat
        case 1: x += rng.uniform(-1, 1); break;         // small walk
        case 2: x = rng.uniform(-1e12, 1e12); break;    // jump
        default: {                                      // arbitrary bit pattern, finite only
          std::uint64_t b = rng.next_u64();
          double d;
          std::memcpy(&d, &b, sizeof d);
          if (std::isfinite(d)) x = d;
        }
      }
      v.push_back(x);
    }
    const auto back = decode_values(encode_values(v), n);
    ASSERT_EQ(back.size(), n);
    for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(bits_of(back[i]), bits_of(v[i])) << "trial " << trial << " i " << i;
  }
}

TEST(Gorilla, ConstantValuesCostOneBitEach) {
  std::vector<double> v(1000, 42.5);
  EXPECT_LE(encode_values(v).size(), 8u + 1000u / 8u + 1u);
}

// ---- segments ----

std::vector<SeriesColumn> sample_columns() {
  std::vector<SeriesColumn> cols;
  for (int s = 0; s < 3; ++s) {
    SeriesColumn c{SeriesKey("cpu.load", {{"client", "c" + std::to_string(s)}}, "s" + std::to_string(s)), {}, {}};
    for (int i = 0; i < 50; ++i) {
      c.ts.push_back(i * 1000 + s);
      c.values.push_back(std::sin(i * 0.1 + s));
    }
    cols.push_back(std::move(c));
  }
  return cols;
}

TEST(Segment, BuildParseRoundTrip) {
  const auto cols = sample_columns();
  const Segment seg = Segment::build(0, kMsPerHour, cols);
  EXPECT_EQ(seg.bytes().substr(0, 5), "MOPS1");
  const Segment back = Segment::parse(seg.bytes());
  EXPECT_EQ(back.start(), 0);
  EXPECT_EQ(back.end(), kMsPerHour);
  EXPECT_EQ(back.point_count(), 150u);
  ASSERT_EQ(back.index().size(), 3u);
  EXPECT_TRUE(std::is_sorted(back.index().begin(), back.index().end(),
                             [](const auto& a, const auto& b) { return a.key < b.key; }));
  for (const auto& c : cols) {
    const SegmentIndexEntry* e = back.find(c.key.canonical());
    ASSERT_NE(e, nullptr);
    EXPECT_EQ(e->first_ts, c.ts.front());
    EXPECT_EQ(e->last_ts, c.ts.back());
    const SeriesColumn r = back.read(*e);
    EXPECT_EQ(r.key, c.key);
    EXPECT_EQ(r.ts, c.ts);
    EXPECT_EQ(r.values, c.values);
  }
  EXPECT_EQ(back.find("nope{}"), nullptr);
}

TEST(Segment, EveryFlippedByteIsDetected) {
  const Segment seg = Segment::build(0, kMsPerHour, sample_columns());
  const std::string good = seg.bytes();
  for (std::size_t i = 0; i < good.size(); i += 7) {
    std::string bad = good;
    bad[i] = static_cast<char>(bad[i] ^ 0x5a);
    EXPECT_THROW(Segment::parse(bad), Error) << "offset " << i;
  }
  EXPECT_THROW(Segment::parse(good.substr(0, good.size() - 1)), Error);
  EXPECT_THROW(Segment::parse(""), Error);
}

// ---- store: write and merge semantics ----

TEST(MetricStore, WriteThenQueryExample) {
  MetricStore store(memory_options(), epoch_clock());
  std::vector<MetricPoint> pts;
  for (int s = 0; s < 50; ++s) {
    for (int m = 0; m < 10; ++m) {
      for (int i = 0; i < 120; ++i) {
        pts.push_back(pt("m" + std::to_string(m), {}, "s" + std::to_string(s), i * 1000, i));
      }
    }
  }
  const auto w = store.write_points(pts);
  EXPECT_EQ(w.accepted, 60000u);
  EXPECT_EQ(store.count_points(), 60000u);
}

TEST(MetricStore, LastWriteWinsAcrossBufferAndSealedData) {
  ManualClock clock(0);
  MetricStore store(memory_options(), clock);
  std::vector<MetricPoint> a = {pt("cpu", {}, "s1", 1000, 1.0)};
  store.write_points(a);
  std::vector<MetricPoint> b = {pt("cpu", {}, "s1", 1000, 2.0)};
  store.write_points(b);
  auto rows = store.scan("cpu");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].value, 2.0);

  store.seal_partition(0, kMsPerHour + 5 * kMsPerMinute);
  std::vector<MetricPoint> c = {pt("cpu", {}, "s1", 1000, 3.0)};
  store.write_points(c);  // lands after the seal
  rows = store.scan("cpu");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].value, 3.0);
  store.seal_partition(0, kMsPerHour + 5 * kMsPerMinute);  // re-seal merges it in
  rows = store.scan("cpu");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].value, 3.0);
}

TEST(MetricStore, SealRefusedInsideGraceWindow) {
  MetricStore store(memory_options(), epoch_clock());
  std::vector<MetricPoint> p = {pt("cpu", {}, "s1", 10, 1.0)};
  store.write_points(p);
  EXPECT_THROW(store.seal_partition(0, kMsPerHour), Error);
  EXPECT_THROW(store.seal_partition(0, kMsPerHour + 5 * kMsPerMinute - 1), Error);
  EXPECT_NO_THROW(store.seal_partition(0, kMsPerHour + 5 * kMsPerMinute));
  EXPECT_EQ(store.seal_ready(kMsPerHour + 5 * kMsPerMinute), 0u);
}

TEST(MetricStore, OutOfOrderWritesSealToStrictlyIncreasingTimestamps) {
  Rng rng(3);
  MetricStore store(memory_options(), epoch_clock());
  std::vector<MetricPoint> p;
  std::map<EpochMs, double> oracle;
  for (int i = 0; i < 2000; ++i) {
    const EpochMs ts = rng.uniform_int(0, kMsPerHour - 1);
    const double v = rng.uniform(0, 100);
    p.push_back(pt("disk", {{"mount", "/"}}, "s1", ts, v));
    oracle[ts] = v;
  }
  store.write_points(p);
  auto seg = store.seal_partition(0, 2 * kMsPerHour);
  ASSERT_EQ(seg->index().size(), 1u);
  const SeriesColumn col = seg->read(seg->index()[0]);
  EXPECT_TRUE(std::adjacent_find(col.ts.begin(), col.ts.end(), std::greater_equal<>()) == col.ts.end());
  ASSERT_EQ(col.ts.size(), oracle.size());
  std::size_t i = 0;
  for (const auto& [ts, v] : oracle) {
    EXPECT_EQ(col.ts[i], ts);
    EXPECT_EQ(col.values[i], v);
    ++i;
  }
}

TEST(MetricStore, MonotoneCounterCompressesWellBelowRawSize) {
  MetricStore store(memory_options(), epoch_clock());
  std::vector<MetricPoint> p;
  double counter = 1e9;
  Rng rng(5);
  for (int i = 0; i < 360; ++i) {  // one hour at 0.1 Hz
    counter += rng.uniform_int(0, 5000);
    p.push_back(pt("net.rx_bytes", {{"iface", "eth0"}}, "s1", i * 10'000, counter));
  }
  store.write_points(p);
  auto seg = store.seal_partition(0, 2 * kMsPerHour);
  const double bytes_per_point = static_cast<double>(seg->bytes().size()) / 360.0;
  EXPECT_LE(bytes_per_point, 0.25 * 16.0) << bytes_per_point;
}

TEST(MetricStore, NonFiniteValuesAreRejected) {
  MetricStore store(memory_options(), epoch_clock());
  std::vector<MetricPoint> p = {pt("m", {}, "s", 1, std::nan("")), pt("m", {}, "s", 2, INFINITY),
                                pt("m", {}, "s", 3, 1.0)};
  const auto w = store.write_points(p);
  EXPECT_EQ(w.accepted, 1u);
  EXPECT_EQ(w.rejected, 2u);
}

// ---- query engine against a brute-force oracle ----

void expect_matches_oracle(const MetricStore& store, const std::vector<OraclePoint>& raw, const Query& q) {
  const auto expected = oracle_eval(raw, q);
  const QueryResult got = store.query(q);
  ASSERT_EQ(got.rows.size(), expected.size()) << print_query(q);
  for (const auto& row : got.rows) {
    auto it = expected.find({row.group, row.bucket_start});
    ASSERT_NE(it, expected.end()) << print_query(q);
    const double tol = 1e-9 * std::max(1.0, std::abs(it->second));
    EXPECT_NEAR(row.value, it->second, tol) << print_query(q);
  }
}

TEST(MetricStore, RandomQueriesMatchBruteForceOracle) {
  Rng rng(17);
  ManualClock clock(0);
  MetricStore store(memory_options(), clock);
  std::vector<OraclePoint> raw;
  const std::vector<std::string> metrics = {"cpu", "mem"};
  const std::vector<std::string> servers = {"s1", "s2", "s3", "s4"};
  const std::vector<std::string> clients = {"acme", "globex"};
  const EpochMs horizon = 5 * kMsPerHour;
  for (int batch = 0; batch < 20; ++batch) {
    std::vector<MetricPoint> pts;
    for (int i = 0; i < 500; ++i) {
      const std::string& m = metrics[rng.uniform_int(0, 1)];
      TagMap tags{{"client", clients[rng.uniform_int(0, 1)]}};
      if (rng.coin(0.5)) tags["role"] = rng.coin(0.5) ? "db" : "web";
      const std::string& s = servers[rng.uniform_int(0, 3)];
      const EpochMs ts = rng.uniform_int(0, horizon / 1000) * 1000;  // collisions are likely
      const double v = rng.uniform(0.5, 100.0);
      pts.push_back(pt(m, tags, s, ts, v));
      raw.push_back({pts.back().series, ts, v});
    }
    store.write_points(pts);
    if (batch % 5 == 4) store.seal_ready(horizon + kMsPerHour);  // mix sealed and buffered data
  }

  const Aggregate aggs[] = {Aggregate::avg, Aggregate::min, Aggregate::max,
                            Aggregate::sum, Aggregate::count, Aggregate::last};
  for (int trial = 0; trial < 300; ++trial) {
    Query q;
    q.metric = metrics[rng.uniform_int(0, 1)];
    q.aggregate = aggs[rng.uniform_int(0, 5)];
    q.from = rng.uniform_int(-kMsPerHour, horizon);
    q.to = rng.coin(0.2) ? kOpenEnd : q.from + rng.uniform_int(1, horizon);
    if (rng.coin(0.5)) q.filters.push_back({"server", servers[rng.uniform_int(0, 3)]});
    if (rng.coin(0.3)) q.filters.push_back({"role", "db"});
    std::sort(q.filters.begin(), q.filters.end());
    if (rng.coin(0.7)) q.bucket_ms = rng.uniform_int(1, 90) * kMsPerMinute / 3;
    if (rng.coin(0.5)) q.group_by.push_back("client");
    if (rng.coin(0.3)) q.group_by.push_back("role");
    expect_matches_oracle(store, raw, q);
  }
}

TEST(MetricStore, UnknownMetricYieldsEmptyResult) {
  MetricStore store(memory_options(), epoch_clock());
  Query q;
  q.metric = "ghost";
  q.aggregate = Aggregate::avg;
  const auto r = store.query(q);
  EXPECT_TRUE(r.rows.empty());
  EXPECT_EQ(r.columns, (std::vector<std::string>{"time", "avg"}));
}

TEST(MetricStore, MalformedRangeIsRejected) {
  MetricStore store(memory_options(), epoch_clock());
  Query q;
  q.metric = "m";
  q.from = 10;
  q.to = 10;
  EXPECT_THROW(store.query(q), Error);
}

TEST(MetricStore, LastBreaksTimestampTiesByGreaterSeriesKey) {
  MetricStore store(memory_options(), epoch_clock());
  std::vector<MetricPoint> p = {pt("m", {}, "a", 5, 1.0), pt("m", {}, "b", 5, 2.0)};
  store.write_points(p);
  Query q;
  q.metric = "m";
  q.aggregate = Aggregate::last;
  const auto r = store.query(q);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].value, 2.0);
}

// ---- retention ----

TEST(MetricStore, RetentionDropsExpiredPartitionsAndKeepsStraddling) {
  StoreOptions o = memory_options();
  o.retention_ms = 3 * kMsPerHour;
  MetricStore store(o, epoch_clock());
  std::vector<MetricPoint> p;
  for (int h = 0; h < 6; ++h) p.push_back(pt("m", {}, "s", h * kMsPerHour + 1, h));
  store.write_points(p);
  store.seal_ready(10 * kMsPerHour);
  // Floor = 5h30m - 3h = 2h30m: hours 0 and 1 end at or before it; hour 2 straddles it.
  const EpochMs now = 5 * kMsPerHour + 30 * kMsPerMinute;
  const auto dropped = store.enforce_retention(now);
  EXPECT_EQ(dropped, (std::vector<EpochMs>{0, kMsPerHour}));
  EXPECT_EQ(store.partition_starts(), (std::vector<EpochMs>{2 * kMsPerHour, 3 * kMsPerHour, 4 * kMsPerHour,
                                                             5 * kMsPerHour}));
  EXPECT_TRUE(store.enforce_retention(now).empty());
  EXPECT_EQ(store.count_points(), 4u);
}

TEST(MetricStore, WritesOlderThanRetentionAreRejected) {
  StoreOptions o = memory_options();
  o.retention_ms = kMsPerHour;
  ManualClock clock(10 * kMsPerHour);
  MetricStore store(o, clock);
  std::vector<MetricPoint> p = {pt("m", {}, "s", 0, 1), pt("m", {}, "s", 10 * kMsPerHour - 1, 2)};
  const auto w = store.write_points(p);
  EXPECT_EQ(w.accepted, 1u);
  EXPECT_EQ(w.rejected, 1u);
}

// ---- durability ----

TEST(MetricStore, ReopenRecoversSealedSegmentsAndWal) {
  TempDir dir;
  StoreOptions o;
  o.data_dir = dir.path();
  o.sync = false;
  std::vector<MetricPoint> p;
  for (int i = 0; i < 100; ++i) p.push_back(pt("m", {{"k", "v"}}, "s", i * 60'000, i));
  {
    MetricStore store(o, epoch_clock());
    store.write_points(p);
    store.seal_partition(0, 2 * kMsPerHour);
    std::vector<MetricPoint> late = {pt("m", {{"k", "v"}}, "s", 5, 99.0), pt("m", {}, "s", 7 * kMsPerHour, 7.0)};
    store.write_points(late);
  }
  MetricStore again(o, epoch_clock());
  const auto all = again.scan("m");
  EXPECT_EQ(all.size(), 102u);
  EXPECT_EQ(again.stats().sealed_partitions, 1u);
  const auto pts = again.scan();
  auto it = std::find_if(pts.begin(), pts.end(), [](const MetricPoint& x) { return x.ts == 5; });
  ASSERT_NE(it, pts.end());
  EXPECT_EQ(it->value, 99.0);
}

// ---- SQL ----

TEST(Sql, ExampleQueryParses) {
  const Query q = parse_query(
      "SELECT avg(value) FROM \"cpu.load\" WHERE server='s1' AND ts >= 0 AND ts < 60000 GROUP BY time(10s)");
  EXPECT_EQ(q.metric, "cpu.load");
  EXPECT_EQ(q.aggregate, Aggregate::avg);
  EXPECT_EQ(q.filters, (std::vector<TagFilter>{{"server", "s1"}}));
  EXPECT_EQ(q.from, 0);
  EXPECT_EQ(q.to, 60000);
  EXPECT_EQ(q.bucket_ms, 10000);
}

TEST(Sql, MissingFromReportsColumnAtEndOfSelect) {
  try {
    parse_query("SELECT avg(value)");
    FAIL();
  } catch (const SqlError& e) {
    EXPECT_EQ(e.column(), 18u);
  }
}

TEST(Sql, CorpusCases) {
  const auto corpus = miniops::testing::load_sql_corpus();
  ASSERT_GE(corpus.size(), 50u);
  for (const auto& c : corpus) {
    if (c.valid) {
      Query q;
      ASSERT_NO_THROW(q = parse_query(c.sql)) << c.sql;
      EXPECT_EQ(q, c.expected) << c.sql;
    } else {
      try {
        parse_query(c.sql);
        ADD_FAILURE() << "accepted: " << c.sql;
      } catch (const SqlError& e) {
        EXPECT_EQ(e.column(), c.column) << c.sql << " -> " << e.what();
        EXPECT_NE(e.message().find(c.message), std::string::npos) << c.sql << " -> " << e.what();
      }
    }
  }
}

TEST(Sql, PrintParseIsAFixedPoint) {
  for (const auto& c : miniops::testing::load_sql_corpus()) {
    if (!c.valid) continue;
    const Query q = parse_query(c.sql);
    const std::string printed = print_query(q);
    EXPECT_EQ(parse_query(printed), q) << printed;
    EXPECT_EQ(print_query(parse_query(printed)), printed);
  }
}

TEST(Sql, RandomQueriesSurvivePrintAndParse) {
  Rng rng(23);
  const std::string alphabet = "ab'\" =,{}x";
  for (int trial = 0; trial < 500; ++trial) {
    Query q;
    for (int i = 0, n = static_cast<int>(rng.uniform_int(1, 8)); i < n; ++i) {
      q.metric.push_back(alphabet[rng.uniform_int(0, alphabet.size() - 1)]);
    }
    q.aggregate = static_cast<Aggregate>(rng.uniform_int(0, 5));
    for (int i = 0, n = static_cast<int>(rng.uniform_int(0, 3)); i < n; ++i) {
      std::string v;
      for (int j = 0, m = static_cast<int>(rng.uniform_int(0, 5)); j < m; ++j) {
        v.push_back(alphabet[rng.uniform_int(0, alphabet.size() - 1)]);
      }
      q.filters.push_back({"k" + std::to_string(rng.uniform_int(0, 3)), v});
    }
    std::sort(q.filters.begin(), q.filters.end());
    q.filters.erase(std::unique(q.filters.begin(), q.filters.end()), q.filters.end());
    q.from = rng.uniform_int(-1'000'000, 1'000'000);
    if (rng.coin(0.7)) q.to = q.from + rng.uniform_int(1, 1'000'000);
    if (rng.coin(0.6)) {
      q.bucket_ms = rng.uniform_int(1, 10'000) * kMsPerSecond;
      if (rng.coin(0.5)) q.group_by = {"server"};
    }
    EXPECT_EQ(parse_query(print_query(q)), q) << print_query(q);
  }
}

// ---- logs ----

TEST(LogStore, FilterQueriesMatchLinearScan) {
  Rng rng(29);
  LogStore logs;
  std::vector<LogEvent> all;
  const char* levels[] = {"debug", "info", "warn", "error"};
  for (int i = 0; i < 3000; ++i) {
    LogEvent e{rng.uniform_int(0, 4 * kMsPerHour), "s" + std::to_string(rng.uniform_int(0, 3)),
               levels[rng.uniform_int(0, 3)], "msg " + std::to_string(rng.uniform_int(0, 50)), {}};
    all.push_back(e);
  }
  logs.store(all);
  EXPECT_EQ(logs.size(), all.size());
  for (int trial = 0; trial < 100; ++trial) {
    LogFilter f;
    if (rng.coin(0.5)) f.level = levels[rng.uniform_int(0, 3)];
    if (rng.coin(0.5)) f.server = "s" + std::to_string(rng.uniform_int(0, 3));
    if (rng.coin(0.3)) f.contains = std::to_string(rng.uniform_int(0, 9));
    if (rng.coin(0.5)) {
      f.from = rng.uniform_int(0, 2 * kMsPerHour);
      f.to = f.from + rng.uniform_int(1, 2 * kMsPerHour);
    }
    if (rng.coin(0.3)) f.limit = static_cast<std::size_t>(rng.uniform_int(1, 20));
    std::vector<LogEvent> expected;
    for (const auto& e : all) {
      if (f.level && e.level != *f.level) continue;
      if (f.server && e.server != *f.server) continue;
      if (f.contains && e.message.find(*f.contains) == std::string::npos) continue;
      if (e.ts < f.from || e.ts >= f.to) continue;
      expected.push_back(e);
    }
    std::stable_sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) { return a.ts < b.ts; });
    if (f.limit && expected.size() > f.limit) expected.resize(f.limit);
    EXPECT_EQ(logs.query(f), expected);
  }
}

TEST(LogStore, EmptyMessageRejectsWholeCall) {
  LogStore logs;
  std::vector<LogEvent> batch = {{1, "s", "info", "ok", {}}, {2, "s", "info", "", {}}};
  EXPECT_THROW(logs.store(batch), Error);
  EXPECT_EQ(logs.size(), 0u);
}

TEST(LogStore, RetentionAndReopen) {
  TempDir dir;
  LogStoreOptions o;
  o.data_dir = dir.path();
  o.sync = false;
  o.retention_ms = 2 * kMsPerHour;
  {
    LogStore logs(o);
    std::vector<LogEvent> batch;
    for (int h = 0; h < 4; ++h) batch.push_back({h * kMsPerHour + 10, "s", "info", "hour " + std::to_string(h), {}});
    logs.store(batch);
  }
  LogStore logs(o);
  EXPECT_EQ(logs.size(), 4u);
  EXPECT_EQ(logs.enforce_retention(4 * kMsPerHour), (std::vector<EpochMs>{0, kMsPerHour}));
  EXPECT_TRUE(logs.enforce_retention(4 * kMsPerHour).empty());
  LogStore reopened(o);
  EXPECT_EQ(reopened.size(), 2u);
}

// ---- metadata ----

TEST(MetadataStore, PutGetEraseAndReopen) {
  TempDir dir;
  const auto journal = dir / "meta.jsonl";
  {
    MetadataStore m(journal, false);
    m.put("agents", "a1", Json{{"version", 1}});
    m.put("agents", "a2", Json{{"version", 1}});
    m.put("agents", "a1", Json{{"version", 2}});
    EXPECT_TRUE(m.erase("agents", "a2"));
    EXPECT_FALSE(m.erase("agents", "a2"));
    EXPECT_FALSE(m.get("agents", "zzz"));
  }
  MetadataStore m(journal, false);
  EXPECT_EQ((*m.get("agents", "a1"))["version"], 2);
  EXPECT_EQ(m.list("agents").size(), 1u);
  m.compact();
  MetadataStore again(journal, false);
  EXPECT_EQ(again.list("agents").size(), 1u);
}

TEST(MetadataStore, ConcurrentWritersAllLand) {
  TempDir dir;
  MetadataStore m(dir / "meta.jsonl", false);
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 100; ++i) m.put("ns", std::to_string(t) + "-" + std::to_string(i), Json(i));
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(m.list("ns").size(), 800u);
  MetadataStore reopened(dir / "meta.jsonl", false);
  EXPECT_EQ(reopened.list("ns").size(), 800u);
}

}  // namespace
}  // namespace miniops::tsstore
