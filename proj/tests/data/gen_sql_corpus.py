#!/usr/bin/env python3
"""Generates sql_corpus.json.

Valid cases carry the expected canonical query. Invalid cases name the offending
token by a marker substring; the expected 1-based column is computed here from the
text alone (marker start, or one past the last non-blank character for end of input).
"""
import json
import pathlib

OPEN = 9223372036854775807

def q(metric, agg, frm=0, to=OPEN, filters=(), bucket_ms=None, group_by=()):
    return {"metric": metric, "aggregate": agg, "from": frm, "to": to,
            "filters": [list(f) for f in sorted(filters)], "bucket_ms": bucket_ms,
            "group_by": list(group_by)}

valid = [
    ("SELECT avg(value) FROM \"cpu.load\" WHERE server='s1' AND ts >= 0 AND ts < 60000 GROUP BY time(10s)",
     q("cpu.load", "avg", 0, 60000, [("server", "s1")], 10000)),
    ("SELECT avg(value) FROM \"cpu.load\" WHERE server='s1' AND ts >= 0 AND ts < 60000 GROUP BY time(10s), client",
     q("cpu.load", "avg", 0, 60000, [("server", "s1")], 10000, ["client"])),
    ("SELECT last(value) FROM \"cpu.load\" WHERE server='s1' AND ts >= 0 AND ts < 9999999999999",
     q("cpu.load", "last", 0, 9999999999999, [("server", "s1")])),
    ("SELECT min(value) FROM \"mem\" WHERE ts >= 5", q("mem", "min", 5)),
    ("SELECT max(value) FROM \"mem\" WHERE ts < 5", q("mem", "max", 0, 5)),
    ("SELECT sum(value) FROM \"disk.free\" WHERE ts >= -100 AND ts < 100", q("disk.free", "sum", -100, 100)),
    ("SELECT count(value) FROM \"m\" WHERE a='1' AND b='2' AND ts >= 1 AND ts < 2",
     q("m", "count", 1, 2, [("a", "1"), ("b", "2")])),
    ("SELECT count(value) FROM \"m\" WHERE b='2' AND a='1' AND ts >= 1 AND ts < 2",
     q("m", "count", 1, 2, [("a", "1"), ("b", "2")])),
    ("select AVG(value) from \"m\" where ts >= 0 and ts < 10 group by TIME(1m)", q("m", "avg", 0, 10, [], 60000)),
    ("SELECT avg(value) FROM \"m\" WHERE ts >= 0 GROUP BY time(2h), server, client",
     q("m", "avg", 0, OPEN, [], 7200000, ["server", "client"])),
    ("SELECT avg(value) FROM \"m\" WHERE ts >= 0 GROUP BY time(90s)", q("m", "avg", 0, OPEN, [], 90000)),
    ("SELECT avg(value) FROM \"m\" WHERE ts >= 0 GROUP BY time(120s)", q("m", "avg", 0, OPEN, [], 120000)),
    ("SELECT last(value) FROM \"a \"\"quoted\"\" metric\" WHERE site='o''brien'",
     q("a \"quoted\" metric", "last", 0, OPEN, [("site", "o'brien")])),
    ("  SELECT   last ( value )   FROM\"m\"WHERE ts>=3   ", q("m", "last", 3)),
    ("SELECT last(value) FROM \"m\" WHERE server='s1' AND server='s1'", q("m", "last", 0, OPEN, [("server", "s1")])),
    ("SELECT last(value) FROM \"m\" WHERE dc.zone='eu_1'", q("m", "last", 0, OPEN, [("dc.zone", "eu_1")])),
    ("SELECT last(value) FROM \"m\" WHERE role='' AND ts < 1", q("m", "last", 0, 1, [("role", "")])),
    ("SELECT sum(value) FROM \"m\" WHERE ts < 100 AND ts >= 50 GROUP BY time(1s)", q("m", "sum", 50, 100, [], 1000)),
    ("SELECT max(value) FROM \"net.rx_bytes\" WHERE server='web-1' AND ts >= 0 GROUP BY time(5m), iface",
     q("net.rx_bytes", "max", 0, OPEN, [("server", "web-1")], 300000, ["iface"])),
    ("SELECT avg(value) FROM \"m\" WHERE ts >= 0 AND ts < 86400000 GROUP BY time(24h)",
     q("m", "avg", 0, 86400000, [], 86400000)),
    ("SELECT count(value) FROM \"m\" WHERE client='A' AND ts >= 0 AND ts < 1000 GROUP BY time(1s), server",
     q("m", "count", 0, 1000, [("client", "A")], 1000, ["server"])),
    ("SELECT min(value) FROM \"swap.used\" WHERE server='db1' AND app='oracle' AND client='ACME' AND ts >= 10",
     q("swap.used", "min", 10, OPEN, [("app", "oracle"), ("client", "ACME"), ("server", "db1")])),
    ("SELECT last(value) FROM \"m\" WHERE ts >= 0 AND ts < 1", q("m", "last", 0, 1)),
    ("SELECT Last(Value) FROM \"m\" WHERE TS >= 0", q("m", "last", 0)),
    ("SELECT avg(value) FROM \"m\" WHERE x='1' GROUP BY time(3600s), x", q("m", "avg", 0, OPEN, [("x", "1")], 3600000, ["x"])),
]

# (text, marker, occurrence index of marker or None for end-of-input, message fragment)
invalid = [
    ("SELECT avg(value)", None, "expected FROM"),
    ("SELECT avg(value) WHERE server='s1'", "WHERE", "expected FROM"),
    ("SELECT median(value) FROM \"m\" WHERE ts >= 0", "median", "unknown aggregate"),
    ("SELECT avg(val) FROM \"m\" WHERE ts >= 0", "val)", "expected value"),
    ("SELECT avg value FROM \"m\" WHERE ts >= 0", "value", "expected '('"),
    ("SELECT avg(value FROM \"m\" WHERE ts >= 0", "FROM", "expected ')'"),
    ("SELECT avg(value) FROM m WHERE ts >= 0", "m WHERE", "expected double-quoted metric name"),
    ("SELECT avg(value) FROM \"m\"", None, "expected WHERE"),
    ("SELECT avg(value) FROM \"m\" WHERE", None, "expected condition"),
    ("SELECT avg(value) FROM \"m\" WHERE ts > 5", ">", "unexpected character"),
    ("SELECT avg(value) FROM \"m\" WHERE ts <= 5", "<", "unexpected character"),
    ("SELECT avg(value) FROM \"m\" WHERE ts = 5", "= 5", "expected '>=' or '<'"),
    ("SELECT avg(value) FROM \"m\" WHERE ts >= 'x'", "'x'", "expected integer"),
    ("SELECT avg(value) FROM \"m\" WHERE server=s1", "s1", "expected single-quoted string"),
    ("SELECT avg(value) FROM \"m\" WHERE server 's1'", "'s1'", "expected '='"),
    ("SELECT avg(value) FROM \"m\" WHERE server='s1", "'s1", "unterminated string"),
    ("SELECT avg(value) FROM \"m WHERE ts >= 0", "\"m", "unterminated metric name"),
    ("SELECT avg(value) FROM \"m\" WHERE ts >= 0 AND", None, "expected condition"),
    ("SELECT avg(value) FROM \"m\" WHERE ts >= 0 GROUP time(1s)", "time", "expected BY"),
    ("SELECT avg(value) FROM \"m\" WHERE ts >= 0 GROUP BY server", "server", "expected time"),
    ("SELECT avg(value) FROM \"m\" WHERE ts >= 0 GROUP BY time(10d)", "d)", "unknown time unit"),
    ("SELECT avg(value) FROM \"m\" WHERE ts >= 0 GROUP BY time(0s)", "0s", "bucket width must be positive"),
    ("SELECT avg(value) FROM \"m\" WHERE ts >= 0 GROUP BY time(10s) server", "server", "after end of query"),
    ("SELECT avg(value) FROM \"m\" WHERE ts >= 0 GROUP BY time(10s), ts", "ts", "cannot group by ts", 1),
    ("SELECT avg(value) FROM \"m\" WHERE ts >= 10 AND ts < 5", "ts <", "empty time range"),
    ("SELECT avg(value) FROM \"m\" WHERE ts >= 1 AND ts >= 2", "ts >= 2", "duplicate lower time bound"),
    ("SELECT avg(value) FROM \"\" WHERE ts >= 0", "\"\"", "metric name must be non-empty"),
    ("SELECT avg(value) FROM \"m\" WHERE ts >= 0; DROP", ";", "unexpected character"),
    ("SELECT avg(value) FROM \"m\" WHERE ts >= 0 GROUP BY time(10s), client, client", "client", "duplicate group-by tag", 1),
    ("FROM \"m\" SELECT avg(value)", "FROM", "expected SELECT"),
]

cases = []
for text, expected in valid:
    cases.append({"sql": text, "valid": True, "expected": expected})
for entry in invalid:
    text, marker, fragment = entry[:3]
    occurrence = entry[3] if len(entry) > 3 else 0
    if marker is None:
        column = len(text.rstrip()) + 1
    else:
        idx = -1
        for _ in range(occurrence + 1):
            idx = text.index(marker, idx + 1)
        column = idx + 1
    cases.append({"sql": text, "valid": False, "column": column, "message": fragment})

assert len(cases) >= 50, len(cases)
out = pathlib.Path(__file__).with_name("sql_corpus.json")
out.write_text(json.dumps(cases, indent=1) + "\n")
print(f"{len(cases)} cases -> {out}")
