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

// Network data model for DC optimal power flow. Every quantity stored here is
// in per-unit on the case's MVA base: loads, generator limits and line
// capacities are MW / base_mva, susceptances are already per-unit, and cost
// coefficients are rescaled so that cost(p_pu) equals cost(p_mw).

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpopf {

// Capacity used for lines without a rating.
inline constexpr double kUnboundedCapacity = 1e6;

// Invalid or unparseable input data. `where` names the offending field or
// line (e.g. "lines[3].susceptance_pu", "mpc.branch row 12").
class CaseError : public std::runtime_error {
 public:
  CaseError(std::string where, const std::string& what)
      : std::runtime_error(where.empty() ? what : where + ": " + what),
        where_(std::move(where)) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

using BusId = int;

struct Line {
  BusId from = 0;
  BusId to = 0;
  double susceptance = 0.0;
  double capacity = kUnboundedCapacity;

  bool operator==(const Line&) const = default;
};

struct Gen {
  BusId bus = 0;
  double p_min = 0.0;
  double p_max = 0.0;
  double c2 = 0.0;
  double c1 = 0.0;

  double cost(double p) const { return c2 * p * p + c1 * p; }
  bool operator==(const Gen&) const = default;
};

struct NetworkCase {
  double base_mva = 100.0;
  BusId slack_bus = 0;
  std::vector<BusId> buses;
  std::vector<double> loads;  // aligned with `buses`
  std::vector<Line> lines;
  std::vector<Gen> gens;

  bool operator==(const NetworkCase&) const = default;

  std::size_t num_buses() const { return buses.size(); }

  std::optional<std::size_t> find_bus(BusId id) const {
    const auto it = std::find(buses.begin(), buses.end(), id);
    if (it == buses.end()) return std::nullopt;
    return static_cast<std::size_t>(it - buses.begin());
  }

  std::size_t index_of(BusId id) const {
    if (auto idx = find_bus(id)) return *idx;
    throw CaseError("", "unknown bus id " + std::to_string(id));
  }

  double load_at(BusId id) const { return loads[index_of(id)]; }

  double total_cost(const std::vector<double>& dispatch) const {
    double c = 0.0;
    for (std::size_t g = 0; g < gens.size(); ++g) c += gens[g].cost(dispatch[g]);
    return c;
  }

  // Throws CaseError when any structural invariant fails.
  void validate() const;
};

inline void NetworkCase::validate() const {
  if (!(base_mva > 0.0)) throw CaseError("base_mva", "must be positive");
  if (buses.empty()) throw CaseError("buses", "case has no buses");
  if (loads.size() != buses.size()) {
    throw CaseError("loads", "load vector length differs from bus count");
  }
  std::map<BusId, std::size_t> seen;
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const std::string where = "buses[" + std::to_string(i) + "]";
    if (!seen.emplace(buses[i], i).second) {
      throw CaseError(where + ".id",
                      "duplicate bus id " + std::to_string(buses[i]));
    }
    if (!(loads[i] >= 0.0)) throw CaseError(where + ".load", "must be >= 0");
  }
  if (!seen.count(slack_bus)) {
    throw CaseError("slack_bus",
                    "bus " + std::to_string(slack_bus) + " does not exist");
  }
  for (std::size_t l = 0; l < lines.size(); ++l) {
    const Line& ln = lines[l];
    const std::string where = "lines[" + std::to_string(l) + "]";
    if (!seen.count(ln.from)) throw CaseError(where + ".from", "unknown bus");
    if (!seen.count(ln.to)) throw CaseError(where + ".to", "unknown bus");
    if (ln.from == ln.to) throw CaseError(where, "line is a self loop");
    if (!(ln.susceptance > 0.0)) {
      throw CaseError(where + ".susceptance", "must be positive");
    }
    if (!(ln.capacity > 0.0)) {
      throw CaseError(where + ".capacity", "must be positive");
    }
  }
  for (std::size_t g = 0; g < gens.size(); ++g) {
    const Gen& gen = gens[g];
    const std::string where = "gens[" + std::to_string(g) + "]";
    if (!seen.count(gen.bus)) throw CaseError(where + ".bus", "unknown bus");
    if (!(gen.p_min <= gen.p_max)) throw CaseError(where, "p_min > p_max");
    if (!(gen.c2 >= 0.0)) throw CaseError(where + ".c2", "must be >= 0");
    if (!(gen.c1 >= 0.0)) throw CaseError(where + ".c1", "must be >= 0");
  }

  // Connectivity by union-find over line endpoints.
  std::vector<std::size_t> parent(buses.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto root = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (const Line& ln : lines) {
    parent[root(seen[ln.from])] = root(seen[ln.to]);
  }
  const std::size_t r0 = root(0);
  for (std::size_t i = 1; i < buses.size(); ++i) {
    if (root(i) != r0) {
      throw CaseError("lines", "network is disconnected (bus " +
                                   std::to_string(buses[i]) +
                                   " unreachable from bus " +
                                   std::to_string(buses[0]) + ")");
    }
  }
}

// Weighted Laplacian with susceptances as edge weights; rows and columns in
// the order of `c.buses`.
inline Eigen::MatrixXd build_laplacian(const NetworkCase& c) {
  const auto n = static_cast<Eigen::Index>(c.num_buses());
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
  for (const Line& ln : c.lines) {
    const auto i = static_cast<Eigen::Index>(c.index_of(ln.from));
    const auto j = static_cast<Eigen::Index>(c.index_of(ln.to));
    B(i, i) += ln.susceptance;
    B(j, j) += ln.susceptance;
    B(i, j) -= ln.susceptance;
    B(j, i) -= ln.susceptance;
  }
  return B;
}

}  // namespace dpopf
