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

#include "miniops/controlplane/selector.hpp"

#include <algorithm>

#include "miniops/common/error.hpp"

namespace miniops::controlplane {

namespace {

const char* op_name(Op op) {
  switch (op) {
    case Op::eq: return "eq";
    case Op::neq: return "neq";
    case Op::in: return "in";
  }
  return "?";
}

bool known_field(const std::string& f) {
  return f == "server_id" || f == "client_name" || f == "client" || f == "role" ||
         (f.starts_with("tags.") && f.size() > 5);
}

// nullopt when a tag is absent.
std::optional<std::string> field_value(const ServerDescriptor& d, const std::string& f) {
  if (f == "server_id") return d.server_id;
  if (f == "client_name" || f == "client") return d.client_name;
  if (f == "role") return d.role;
  auto it = d.tags.find(f.substr(5));
  if (it == d.tags.end()) return std::nullopt;
  return it->second;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

}  // namespace

Json descriptor_to_json(const ServerDescriptor& d) {
  return {{"server_id", d.server_id}, {"client_name", d.client_name}, {"role", d.role}, {"tags", d.tags},
          {"last_seen", d.last_seen}};
}

ServerDescriptor descriptor_from_json(const Json& j) {
  try {
    ServerDescriptor d;
    d.server_id = j.at("server_id").get<std::string>();
    d.client_name = j.value("client_name", "");
    d.role = j.value("role", "");
    d.tags = j.value("tags", TagMap{});
    d.last_seen = j.value("last_seen", EpochMs{0});
    return d;
  } catch (const Json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("malformed server descriptor: ") + e.what());
  }
}

void validate(const TargetSelector& s) {
  for (const auto& p : s.predicates) {
    if (!known_field(p.field)) throw Error(Errc::invalid_argument, "unknown selector field '" + p.field + "'");
    if (p.op != Op::in && p.values.size() != 1) {
      throw Error(Errc::invalid_argument, std::string("operator ") + op_name(p.op) + " takes exactly one value");
    }
    if (p.op == Op::in && p.values.empty()) throw Error(Errc::invalid_argument, "operator in needs at least one value");
  }
}

bool matches(const TargetSelector& s, const ServerDescriptor& d) {
  return std::all_of(s.predicates.begin(), s.predicates.end(), [&](const Predicate& p) {
    const auto v = field_value(d, p.field);
    switch (p.op) {
      case Op::eq: return v && *v == p.values[0];
      case Op::neq: return !v || *v != p.values[0];
      case Op::in: return v && std::find(p.values.begin(), p.values.end(), *v) != p.values.end();
    }
    return false;
  });
}

Json selector_to_json(const TargetSelector& s) {
  Json out = Json::array();
  for (const auto& p : s.predicates) {
    Json value = p.op == Op::in ? Json(p.values) : Json(p.values.at(0));
    out.push_back({{"field", p.field}, {"op", op_name(p.op)}, {"value", value}});
  }
  return out;
}

TargetSelector selector_from_json(const Json& j) {
  TargetSelector s;
  if (j.is_null() || (j.is_object() && j.empty())) return s;
  if (!j.is_array()) throw Error(Errc::invalid_argument, "selector must be an array of predicates");
  try {
    for (const auto& p : j) {
      Predicate pred;
      pred.field = p.at("field").get<std::string>();
      const auto op = p.value("op", "eq");
      if (op == "eq") pred.op = Op::eq;
      else if (op == "neq") pred.op = Op::neq;
      else if (op == "in") pred.op = Op::in;
      else throw Error(Errc::invalid_argument, "unknown selector operator '" + op + "'");
      const Json& v = p.at("value");
      if (v.is_array()) pred.values = v.get<std::vector<std::string>>();
      else pred.values = {v.get<std::string>()};
      s.predicates.push_back(std::move(pred));
    }
  } catch (const Json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("malformed selector: ") + e.what());
  }
  validate(s);
  return s;
}

TargetSelector parse_selector(const std::string& text) {
  TargetSelector s;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string part = trim(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    start = comma == std::string::npos ? text.size() + 1 : comma + 1;
    if (part.empty()) continue;
    Predicate p;
    auto pos = part.find("!=");
    if (pos != std::string::npos) {
      p.op = Op::neq;
      p.field = trim(part.substr(0, pos));
      p.values = {trim(part.substr(pos + 2))};
    } else if ((pos = part.find('=')) != std::string::npos) {
      p.field = trim(part.substr(0, pos));
      const std::string rhs = trim(part.substr(pos + 1));
      if (rhs.find('|') != std::string::npos) {
        p.op = Op::in;
        std::size_t b = 0;
        while (b <= rhs.size()) {
          const auto bar = rhs.find('|', b);
          p.values.push_back(trim(rhs.substr(b, bar == std::string::npos ? std::string::npos : bar - b)));
          b = bar == std::string::npos ? rhs.size() + 1 : bar + 1;
        }
      } else {
        p.values = {rhs};
      }
    } else {
      throw Error(Errc::invalid_argument, "selector term '" + part + "' needs = or !=");
    }
    s.predicates.push_back(std::move(p));
  }
  validate(s);
  return s;
}

}  // namespace miniops::controlplane
