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

#include <stdexcept>
#include <string>
#include <string_view>

#include "miniops/tsstore/query.hpp"

namespace miniops::tsstore {

class SqlError : public std::runtime_error {
 public:
  SqlError(std::size_t column, const std::string& message)
      : std::runtime_error("column " + std::to_string(column) + ": " + message), column_(column), message_(message) {}

  // 1-based column of the offending token; end of input reports one past the last token.
  std::size_t column() const noexcept { return column_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::size_t column_;
  std::string message_;
};

//   query     = "SELECT" agg "(" "value" ")" "FROM" metric "WHERE" cond {"AND" cond}
//               ["GROUP BY" groupings]
//   agg       = "avg" | "min" | "max" | "sum" | "count" | "last"
//   cond      = tag "=" string | "ts" (">=" | "<") int
//   groupings = "time(" int unit ")" {"," tag}
//   unit      = "s" | "m" | "h"
// Metric names are double-quoted, strings single-quoted; a doubled quote escapes itself.
// Keywords and aggregate names are case-insensitive.
Query parse_query(std::string_view text);

// Inverse of parse_query: parse_query(print_query(q)) == q for every parsed q.
std::string print_query(const Query& q);

}  // namespace miniops::tsstore
