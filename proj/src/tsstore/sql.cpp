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

#include "miniops/tsstore/sql.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <vector>

namespace miniops::tsstore {

namespace {

enum class Tok { ident, integer, metric, string, lparen, rparen, comma, eq, ge, lt, end };

struct Token {
  Tok kind;
  std::string text;
  std::size_t column;  // 1-based
  std::int64_t number = 0;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; }

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<Token> lex(std::string_view in) {
  std::vector<Token> out;
  std::size_t i = 0;
  std::size_t last_end = 0;
  while (i < in.size()) {
    const char c = in[i];
    const std::size_t col = i + 1;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < in.size() && ident_char(in[j])) ++j;
      out.push_back({Tok::ident, std::string(in.substr(i, j - i)), col});
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '-') {
      std::size_t j = i + (c == '-' ? 1 : 0);
      const std::size_t digits = j;
      while (j < in.size() && std::isdigit(static_cast<unsigned char>(in[j]))) ++j;
      if (j == digits) throw SqlError(col, "unexpected character '-'");
      Token t{Tok::integer, std::string(in.substr(i, j - i)), col};
      try {
        std::size_t used = 0;
        t.number = std::stoll(t.text, &used);
      } catch (const std::exception&) {
        throw SqlError(col, "integer out of range");
      }
      out.push_back(std::move(t));
      i = j;
    } else if (c == '"' || c == '\'') {
      std::string text;
      std::size_t j = i + 1;
      for (;;) {
        if (j >= in.size()) throw SqlError(col, c == '"' ? "unterminated metric name" : "unterminated string");
        if (in[j] == c) {
          if (j + 1 < in.size() && in[j + 1] == c) {
            text.push_back(c);
            j += 2;
            continue;
          }
          break;
        }
        text.push_back(in[j++]);
      }
      out.push_back({c == '"' ? Tok::metric : Tok::string, std::move(text), col});
      i = j + 1;
    } else if (c == '(') {
      out.push_back({Tok::lparen, "(", col});
      ++i;
    } else if (c == ')') {
      out.push_back({Tok::rparen, ")", col});
      ++i;
    } else if (c == ',') {
      out.push_back({Tok::comma, ",", col});
      ++i;
    } else if (c == '=') {
      out.push_back({Tok::eq, "=", col});
      ++i;
    } else if (c == '>' && i + 1 < in.size() && in[i + 1] == '=') {
      out.push_back({Tok::ge, ">=", col});
      i += 2;
    } else if (c == '<' && !(i + 1 < in.size() && (in[i + 1] == '=' || in[i + 1] == '>'))) {
      out.push_back({Tok::lt, "<", col});
      ++i;
    } else {
      throw SqlError(col, std::string("unexpected character '") + c + "'");
    }
    last_end = i;
  }
  out.push_back({Tok::end, "", last_end + 1});
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Query parse() {
    Query q;
    keyword("SELECT");
    const Token& agg = peek();
    if (agg.kind != Tok::ident) fail(agg, "expected aggregate name");
    auto a = parse_aggregate(agg.text);
    if (!a) fail(agg, "unknown aggregate '" + agg.text + "'");
    q.aggregate = *a;
    ++pos_;
    expect(Tok::lparen, "'('");
    keyword("value");
    expect(Tok::rparen, "')'");
    keyword("FROM");
    const Token& metric = expect(Tok::metric, "double-quoted metric name");
    if (metric.text.empty()) fail(metric, "metric name must be non-empty");
    q.metric = metric.text;
    keyword("WHERE");

    std::optional<std::size_t> lower_col, upper_col;
    do {
      const Token& lhs = expect(Tok::ident, "condition");
      if (lower(lhs.text) == "ts") {
        const Token& op = peek();
        if (op.kind != Tok::ge && op.kind != Tok::lt) fail(op, "expected '>=' or '<' after ts");
        ++pos_;
        const Token& bound = expect(Tok::integer, "integer timestamp");
        auto& seen = op.kind == Tok::ge ? lower_col : upper_col;
        if (seen) fail(lhs, op.kind == Tok::ge ? "duplicate lower time bound" : "duplicate upper time bound");
        seen = lhs.column;
        (op.kind == Tok::ge ? q.from : q.to) = bound.number;
      } else {
        expect(Tok::eq, "'='");
        const Token& value = expect(Tok::string, "single-quoted string");
        q.filters.push_back({lhs.text, value.text});
      }
    } while (accept_keyword("AND"));

    if (accept_keyword("GROUP")) {
      keyword("BY");
      keyword("time");
      expect(Tok::lparen, "'('");
      const Token& width = expect(Tok::integer, "bucket width");
      if (width.number <= 0) fail(width, "bucket width must be positive");
      const Token& unit = expect(Tok::ident, "time unit (s, m or h)");
      EpochMs scale = 0;
      if (unit.text == "s") scale = kMsPerSecond;
      else if (unit.text == "m") scale = kMsPerMinute;
      else if (unit.text == "h") scale = kMsPerHour;
      else fail(unit, "unknown time unit '" + unit.text + "'");
      if (width.number > std::numeric_limits<EpochMs>::max() / scale) fail(width, "bucket width out of range");
      q.bucket_ms = width.number * scale;
      expect(Tok::rparen, "')'");
      while (peek().kind == Tok::comma) {
        ++pos_;
        const Token& tag = expect(Tok::ident, "group-by tag");
        if (lower(tag.text) == "ts") fail(tag, "cannot group by ts");
        if (std::find(q.group_by.begin(), q.group_by.end(), tag.text) != q.group_by.end()) {
          fail(tag, "duplicate group-by tag '" + tag.text + "'");
        }
        q.group_by.push_back(tag.text);
      }
    }
    if (peek().kind != Tok::end) fail(peek(), "unexpected '" + peek().text + "' after end of query");

    if (q.from >= q.to) fail_at(upper_col ? *upper_col : *lower_col, "empty time range");
    std::sort(q.filters.begin(), q.filters.end());
    q.filters.erase(std::unique(q.filters.begin(), q.filters.end()), q.filters.end());
    return q;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }

  [[noreturn]] void fail(const Token& t, const std::string& msg) const { throw SqlError(t.column, msg); }
  [[noreturn]] void fail_at(std::size_t column, const std::string& msg) const { throw SqlError(column, msg); }

  const Token& expect(Tok kind, const std::string& what) {
    const Token& t = peek();
    if (t.kind != kind) fail(t, "expected " + what + (t.kind == Tok::end ? " at end of input" : ""));
    ++pos_;
    return t;
  }

  bool accept_keyword(const std::string& kw) {
    const Token& t = peek();
    if (t.kind == Tok::ident && lower(t.text) == lower(kw)) {
      ++pos_;
      return true;
    }
    return false;
  }

  void keyword(const std::string& kw) {
    if (!accept_keyword(kw)) {
      const Token& t = peek();
      fail(t, "expected " + kw + (t.kind == Tok::end ? " at end of input" : ""));
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

std::string quote(const std::string& s, char q) {
  std::string out(1, q);
  for (char c : s) {
    if (c == q) out.push_back(q);
    out.push_back(c);
  }
  out.push_back(q);
  return out;
}

}  // namespace

Query parse_query(std::string_view text) {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) throw SqlError(1, "empty query");
  return Parser(lex(text)).parse();
}

std::string print_query(const Query& q) {
  std::string out = "SELECT ";
  out += to_string(q.aggregate);
  out += "(value) FROM ";
  out += quote(q.metric, '"');
  out += " WHERE ";
  for (const auto& f : q.filters) out += f.key + "=" + quote(f.value, '\'') + " AND ";
  out += "ts >= " + std::to_string(q.from);
  if (q.to != kOpenEnd) out += " AND ts < " + std::to_string(q.to);
  if (q.bucket_ms) {
    const EpochMs w = *q.bucket_ms;
    std::string width;
    if (w % kMsPerHour == 0) width = std::to_string(w / kMsPerHour) + "h";
    else if (w % kMsPerMinute == 0) width = std::to_string(w / kMsPerMinute) + "m";
    else width = std::to_string(w / kMsPerSecond) + "s";
    out += " GROUP BY time(" + width + ")";
    for (const auto& g : q.group_by) out += ", " + g;
  }
  return out;
}

}  // namespace miniops::tsstore
