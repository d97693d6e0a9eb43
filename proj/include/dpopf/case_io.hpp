// Copyright 2026 The dpopf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#pragma once

// Case readers and writers: the native JSON case format, a DC subset of the
// MATPOWER case format, and zone partition files.
//
// Native case JSON:
//   {"base_mva": 100, "slack_bus": 1,
//    "buses": [{"id": 1, "load_mw": 0}, ...],
//    "lines": [{"from": 1, "to": 2, "susceptance_pu": 10, "capacity_mw": 80}],
//    "gens":  [{"bus": 1, "pmin_mw": 0, "pmax_mw": 200,
//               "c2_per_mw2": 0.01, "c1_per_mw": 20}]}
//
// Zone partition JSON:
//   {"zones": {"1": [1, 2], "2": [3]}}

#include <nlohmann/json.hpp>

#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dpopf/case_model.hpp"

namespace dpopf {

using ZoneId = int;

struct ZonePartition {
  std::map<BusId, ZoneId> assignment;

  std::set<ZoneId> zone_ids() const {
    std::set<ZoneId> ids;
    for (const auto& [bus, zone] : assignment) ids.insert(zone);
    return ids;
  }
};

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CaseError(path, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace detail {

using nlohmann::json;

inline const json& require(const json& obj, const std::string& key,
                           const std::string& where) {
  if (!obj.is_object()) throw CaseError(where, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw CaseError(where.empty() ? key : where + "." + key,
                    "missing required field \"" + key + "\"");
  }
  return *it;
}

inline double require_number(const json& obj, const std::string& key,
                             const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_number()) {
    throw CaseError(where.empty() ? key : where + "." + key,
                    "expected a number");
  }
  return v.get<double>();
}

inline int require_int(const json& obj, const std::string& key,
                       const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_number_integer()) {
    throw CaseError(where.empty() ? key : where + "." + key,
                    "expected an integer");
  }
  return v.get<int>();
}

inline const json& require_array(const json& obj, const std::string& key,
                                 const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_array()) {
    throw CaseError(where.empty() ? key : where + "." + key,
                    "expected an array");
  }
  return v;
}

// Finds a double m near `guess` with forward(m) == target exactly, so that
// writing m and re-reading it reproduces the stored per-unit value bit for
// bit. Falls back to `guess` when no such neighbour exists.
inline double exact_preimage(double target, double guess,
                             const std::function<double(double)>& forward) {
  if (forward(guess) == target) return guess;
  double up = guess;
  double down = guess;
  for (int step = 0; step < 16; ++step) {
    up = std::nextafter(up, INFINITY);
    if (forward(up) == target) return up;
    down = std::nextafter(down, -INFINITY);
    if (forward(down) == target) return down;
  }
  return guess;
}

}  // namespace detail

inline NetworkCase parse_case_json(std::string_view text) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CaseError("byte " + std::to_string(e.byte), "invalid JSON");
  }
  NetworkCase c;
  c.base_mva = detail::require_number(doc, "base_mva", "");
  if (!(c.base_mva > 0.0)) throw CaseError("base_mva", "must be positive");
  const double base = c.base_mva;
  const double base2 = base * base;
  c.slack_bus = detail::require_int(doc, "slack_bus", "");

  const json& buses = detail::require_array(doc, "buses", "");
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const std::string where = "buses[" + std::to_string(i) + "]";
    c.buses.push_back(detail::require_int(buses[i], "id", where));
    c.loads.push_back(detail::require_number(buses[i], "load_mw", where) / base);
  }
  const json& lines = detail::require_array(doc, "lines", "");
  for (std::size_t l = 0; l < lines.size(); ++l) {
    const std::string where = "lines[" + std::to_string(l) + "]";
    Line ln;
    ln.from = detail::require_int(lines[l], "from", where);
    ln.to = detail::require_int(lines[l], "to", where);
    ln.susceptance = detail::require_number(lines[l], "susceptance_pu", where);
    ln.capacity = detail::require_number(lines[l], "capacity_mw", where) / base;
    c.lines.push_back(ln);
  }
  const json& gens = detail::require_array(doc, "gens", "");
  for (std::size_t g = 0; g < gens.size(); ++g) {
    const std::string where = "gens[" + std::to_string(g) + "]";
    Gen gen;
    gen.bus = detail::require_int(gens[g], "bus", where);
    gen.p_min = detail::require_number(gens[g], "pmin_mw", where) / base;
    gen.p_max = detail::require_number(gens[g], "pmax_mw", where) / base;
    gen.c2 = detail::require_number(gens[g], "c2_per_mw2", where) * base2;
    gen.c1 = detail::require_number(gens[g], "c1_per_mw", where) * base;
    c.gens.push_back(gen);
  }
  c.validate();
  return c;
}

inline std::string serialize_case_json(const NetworkCase& c) {
  using detail::json;
  const double base = c.base_mva;
  const double base2 = base * base;
  auto mw = [&](double pu) {
    return detail::exact_preimage(pu, pu * base,
                                  [&](double m) { return m / base; });
  };
  json doc;
  doc["base_mva"] = base;
  doc["slack_bus"] = c.slack_bus;
  doc["buses"] = json::array();
  for (std::size_t i = 0; i < c.buses.size(); ++i) {
    doc["buses"].push_back({{"id", c.buses[i]}, {"load_mw", mw(c.loads[i])}});
  }
  doc["lines"] = json::array();
  for (const Line& ln : c.lines) {
    doc["lines"].push_back({{"from", ln.from},
                            {"to", ln.to},
                            {"susceptance_pu", ln.susceptance},
                            {"capacity_mw", mw(ln.capacity)}});
  }
  doc["gens"] = json::array();
  for (const Gen& g : c.gens) {
    const double c2 = detail::exact_preimage(
        g.c2, g.c2 / base2, [&](double m) { return m * base2; });
    const double c1 = detail::exact_preimage(
        g.c1, g.c1 / base, [&](double m) { return m * base; });
    doc["gens"].push_back({{"bus", g.bus},
                           {"pmin_mw", mw(g.p_min)},
                           {"pmax_mw", mw(g.p_max)},
                           {"c2_per_mw2", c2},
                           {"c1_per_mw", c1}});
  }
  return doc.dump(2) + "\n";
}

namespace detail {

// Numeric rows of a MATPOWER matrix assignment "mpc.<name> = [ ... ];".
inline std::vector<std::vector<double>> matpower_matrix(std::string_view text,
                                                        const std::string& name,
                                                        bool required = true) {
  const std::string key = "mpc." + name;
  std::size_t pos = 0;
  while (true) {
    pos = text.find(key, pos);
    if (pos == std::string_view::npos) {
      if (required) throw CaseError(key, "matrix not found");
      return {};
    }
    const std::size_t after = pos + key.size();
    if (after < text.size() &&
        (std::isalnum(static_cast<unsigned char>(text[after])) ||
         text[after] == '_')) {
      pos = after;
      continue;
    }
    break;
  }
  const std::size_t open = text.find('[', pos);
  const std::size_t close = text.find(']', open);
  if (open == std::string_view::npos || close == std::string_view::npos) {
    throw CaseError(key, "unterminated matrix");
  }
  std::vector<std::vector<double>> rows;
  std::vector<double> row;
  std::string token;
  int row_no = 1;
  auto flush_token = [&] {
    if (token.empty()) return;
    try {
      std::size_t used = 0;
      const double v = std::stod(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
      row.push_back(v);
    } catch (const std::exception&) {
      throw CaseError(key + " row " + std::to_string(row_no),
                      "malformed entry '" + token + "'");
    }
    token.clear();
  };
  auto flush_row = [&] {
    flush_token();
    if (!row.empty()) {
      if (!rows.empty() && row.size() != rows.front().size()) {
        throw CaseError(key + " row " + std::to_string(row_no),
                        "expected " + std::to_string(rows.front().size()) +
                            " columns, found " + std::to_string(row.size()));
      }
      rows.push_back(std::move(row));
      row.clear();
      ++row_no;
    }
  };
  for (std::size_t i = open + 1; i < close; ++i) {
    const char ch = text[i];
    if (ch == '%') {
      while (i < close && text[i] != '\n') ++i;
      flush_token();
      continue;
    }
    if (ch == ';') {
      flush_row();
    } else if (ch == '\n' || ch == '\r') {
      flush_row();
    } else if (ch == ',' || std::isspace(static_cast<unsigned char>(ch))) {
      flush_token();
    } else {
      token.push_back(ch);
    }
  }
  flush_row();
  return rows;
}

inline double matpower_scalar(std::string_view text, const std::string& name) {
  const std::string key = "mpc." + name;
  const std::size_t pos = text.find(key);
  if (pos == std::string_view::npos) throw CaseError(key, "not found");
  const std::size_t eq = text.find('=', pos);
  const std::size_t end = text.find_first_of(";\n", eq);
  if (eq == std::string_view::npos) throw CaseError(key, "missing value");
  try {
    return std::stod(std::string(text.substr(eq + 1, end - eq - 1)));
  } catch (const std::exception&) {
    throw CaseError(key, "malformed value");
  }
}

inline void require_columns(const std::vector<double>& row, std::size_t cols,
                            const std::string& where) {
  if (row.size() < cols) {
    throw CaseError(where, "expected at least " + std::to_string(cols) +
                               " columns, found " + std::to_string(row.size()));
  }
}

}  // namespace detail

// Extracts the DC-relevant columns of a MATPOWER case: bus (id, type, Pd),
// gen (bus, status, Pmax, Pmin), branch (from, to, x, rateA, status) and
// polynomial gencost. Out-of-service generators and branches are dropped;
// rateA = 0 maps to kUnboundedCapacity.
inline NetworkCase parse_matpower(std::string_view text) {
  NetworkCase c;
  c.base_mva = detail::matpower_scalar(text, "baseMVA");
  if (!(c.base_mva > 0.0)) throw CaseError("mpc.baseMVA", "must be positive");
  const double base = c.base_mva;
  const double base2 = base * base;

  const auto bus = detail::matpower_matrix(text, "bus");
  const auto gen = detail::matpower_matrix(text, "gen");
  const auto branch = detail::matpower_matrix(text, "branch");
  const auto gencost = detail::matpower_matrix(text, "gencost");

  int slack_count = 0;
  for (std::size_t i = 0; i < bus.size(); ++i) {
    const std::string where = "mpc.bus row " + std::to_string(i + 1);
    detail::require_columns(bus[i], 3, where);
    c.buses.push_back(static_cast<BusId>(bus[i][0]));
    c.loads.push_back(bus[i][2] / base);
    if (bus[i][1] == 3.0) {
      c.slack_bus = c.buses.back();
      ++slack_count;
    }
  }
  if (slack_count != 1) {
    throw CaseError("mpc.bus", "expected exactly one reference bus (type 3), found " +
                                   std::to_string(slack_count));
  }

  if (gencost.size() < gen.size()) {
    throw CaseError("mpc.gencost", "fewer cost rows than generators");
  }
  for (std::size_t g = 0; g < gen.size(); ++g) {
    const std::string where = "mpc.gen row " + std::to_string(g + 1);
    detail::require_columns(gen[g], 10, where);
    const auto& cost = gencost[g];
    const std::string cwhere = "mpc.gencost row " + std::to_string(g + 1);
    detail::require_columns(cost, 4, cwhere);
    if (cost[0] != 2.0) {
      throw CaseError(cwhere, "unsupported cost model " +
                                  std::to_string(static_cast<int>(cost[0])) +
                                  " (only polynomial model 2 is supported)");
    }
    const auto ncost = static_cast<std::size_t>(cost[3]);
    detail::require_columns(cost, 4 + ncost, cwhere);
    // Coefficients are c(n-1) ... c0; only degree <= 2 is representable.
    double c2 = 0.0;
    double c1 = 0.0;
    for (std::size_t k = 0; k < ncost; ++k) {
      const std::size_t degree = ncost - 1 - k;
      const double coef = cost[4 + k];
      if (degree > 2 && coef != 0.0) {
        throw CaseError(cwhere, "polynomial cost of degree " +
                                    std::to_string(degree) + " is unsupported");
      }
      if (degree == 2) c2 = coef;
      if (degree == 1) c1 = coef;
    }
    if (gen[g][7] <= 0.0) continue;
    Gen unit;
    unit.bus = static_cast<BusId>(gen[g][0]);
    unit.p_max = gen[g][8] / base;
    unit.p_min = gen[g][9] / base;
    unit.c2 = c2 * base2;
    unit.c1 = c1 * base;
    c.gens.push_back(unit);
  }

  for (std::size_t l = 0; l < branch.size(); ++l) {
    const std::string where = "mpc.branch row " + std::to_string(l + 1);
    detail::require_columns(branch[l], 11, where);
    if (branch[l][10] <= 0.0) continue;
    const double x = branch[l][3];
    if (x == 0.0) throw CaseError(where, "zero reactance");
    Line ln;
    ln.from = static_cast<BusId>(branch[l][0]);
    ln.to = static_cast<BusId>(branch[l][1]);
    ln.susceptance = 1.0 / x;
    ln.capacity = branch[l][5] == 0.0 ? kUnboundedCapacity : branch[l][5] / base;
    c.lines.push_back(ln);
  }
  c.validate();
  return c;
}

inline ZonePartition parse_partition_json(std::string_view text) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CaseError("byte " + std::to_string(e.byte), "invalid JSON");
  }
  const json& zones = detail::require(doc, "zones", "");
  if (!zones.is_object()) throw CaseError("zones", "expected an object");
  ZonePartition part;
  for (const auto& [key, members] : zones.items()) {
    const std::string where = "zones." + key;
    ZoneId id = 0;
    try {
      std::size_t used = 0;
      id = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw CaseError(where, "zone id must be an integer");
    }
    if (!members.is_array() || members.empty()) {
      throw CaseError(where, "expected a non-empty array of bus ids");
    }
    for (const json& m : members) {
      if (!m.is_number_integer()) throw CaseError(where, "bus ids must be integers");
      const BusId b = m.get<BusId>();
      if (!part.assignment.emplace(b, id).second) {
        throw CaseError(where, "bus " + std::to_string(b) +
                                   " is assigned to more than one zone");
      }
    }
  }
  return part;
}

inline std::string serialize_partition_json(const ZonePartition& part) {
  nlohmann::json zones = nlohmann::json::object();
  for (const auto& [bus, zone] : part.assignment) {
    zones[std::to_string(zone)].push_back(bus);
  }
  return nlohmann::json{{"zones", zones}}.dump(2) + "\n";
}

inline NetworkCase load_case_file(const std::string& path) {
  const std::string text = read_text_file(path);
  if (path.size() >= 2 && path.substr(path.size() - 2) == ".m") {
    return parse_matpower(text);
  }
  return parse_case_json(text);
}

inline ZonePartition load_partition_file(const std::string& path) {
  return parse_partition_json(read_text_file(path));
}

}  // namespace dpopf
