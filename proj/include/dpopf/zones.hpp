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

#include <Eigen/Dense>

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dpopf/case_io.hpp"
#include "dpopf/case_model.hpp"

namespace dpopf {

// One zone's slice of the network.
//
//   domestic  R_z : buses assigned to the zone
//   extended  V_z : R_z plus every bus adjacent to R_z
//   boundary  M_z : buses of V_z that also belong to another zone's V_z'
//
// Angles of the zone's local copy are indexed by `extended`; consensus is
// enforced on `boundary` only.
struct ZoneView {
  ZoneId zone_id = 0;
  std::vector<BusId> domestic;
  std::vector<BusId> extended;
  std::vector<BusId> boundary;
  // Rows of the network Laplacian for domestic buses, columns over `extended`.
  Eigen::MatrixXd local_laplacian_rows;
  // Lines with at least one domestic endpoint (internal and tie lines).
  std::vector<Line> local_lines;
  std::vector<Gen> local_gens;
  // Index of each local generator in NetworkCase::gens.
  std::vector<std::size_t> gen_index;
  // Loads of the domestic buses (the zone's private dataset), aligned with
  // `domestic`.
  std::vector<double> local_loads;
  BusId slack_bus = 0;

  bool contains_slack() const { return position(extended, slack_bus).has_value(); }

  std::optional<std::size_t> extended_pos(BusId b) const { return position(extended, b); }
  std::optional<std::size_t> boundary_pos(BusId b) const { return position(boundary, b); }
  std::optional<std::size_t> domestic_pos(BusId b) const { return position(domestic, b); }

 private:
  static std::optional<std::size_t> position(const std::vector<BusId>& v, BusId b) {
    const auto it = std::lower_bound(v.begin(), v.end(), b);
    if (it == v.end() || *it != b) return std::nullopt;
    return static_cast<std::size_t>(it - v.begin());
  }
};

// Throws CaseError if some bus is unassigned or the partition names buses
// that are not in the case.
inline void validate_partition(const NetworkCase& c, const ZonePartition& part) {
  for (const auto& [bus, zone] : part.assignment) {
    if (!c.find_bus(bus)) {
      throw CaseError("zones." + std::to_string(zone),
                      "bus " + std::to_string(bus) + " is not in the case");
    }
  }
  for (BusId b : c.buses) {
    if (!part.assignment.count(b)) {
      throw CaseError("zones", "bus " + std::to_string(b) +
                                   " is not assigned to any zone");
    }
  }
}

// Views sorted by zone id.
inline std::vector<ZoneView> build_zone_views(const NetworkCase& c,
                                              const ZonePartition& part) {
  validate_partition(c, part);
  const Eigen::MatrixXd B = build_laplacian(c);

  std::map<ZoneId, ZoneView> views;
  for (const auto& [bus, zone] : part.assignment) {
    ZoneView& v = views[zone];
    v.zone_id = zone;
    v.slack_bus = c.slack_bus;
    v.domestic.push_back(bus);  // map iteration keeps bus ids sorted
  }

  std::map<ZoneId, std::set<BusId>> extended;
  std::map<ZoneId, bool> has_tie;
  for (auto& [zone, v] : views) {
    extended[zone].insert(v.domestic.begin(), v.domestic.end());
  }
  for (const Line& ln : c.lines) {
    const ZoneId zf = part.assignment.at(ln.from);
    const ZoneId zt = part.assignment.at(ln.to);
    extended[zf].insert(ln.to);
    extended[zt].insert(ln.from);
    views[zf].local_lines.push_back(ln);
    if (zf != zt) {
      views[zt].local_lines.push_back(ln);
      has_tie[zf] = has_tie[zt] = true;
    }
  }

  // A bus is on the boundary of z when it lies in V_z and in some other V_z'.
  std::map<BusId, int> coverage;
  for (const auto& [zone, ext] : extended) {
    for (BusId b : ext) ++coverage[b];
  }

  for (auto& [zone, v] : views) {
    v.extended.assign(extended[zone].begin(), extended[zone].end());
    for (BusId b : v.extended) {
      if (coverage[b] > 1) v.boundary.push_back(b);
    }
    for (std::size_t g = 0; g < c.gens.size(); ++g) {
      if (part.assignment.at(c.gens[g].bus) == zone) {
        v.local_gens.push_back(c.gens[g]);
        v.gen_index.push_back(g);
      }
    }
    if (v.local_gens.empty() && !has_tie[zone]) {
      throw CaseError("zones." + std::to_string(zone),
                      "zone has neither a generator nor a tie line");
    }
    const auto nd = static_cast<Eigen::Index>(v.domestic.size());
    const auto nv = static_cast<Eigen::Index>(v.extended.size());
    v.local_laplacian_rows.setZero(nd, nv);
    for (Eigen::Index r = 0; r < nd; ++r) {
      const auto bi = static_cast<Eigen::Index>(c.index_of(v.domestic[r]));
      for (Eigen::Index k = 0; k < nv; ++k) {
        const auto bj = static_cast<Eigen::Index>(c.index_of(v.extended[k]));
        v.local_laplacian_rows(r, k) = B(bi, bj);
      }
      v.local_loads.push_back(c.loads[static_cast<std::size_t>(bi)]);
    }
  }

  std::vector<ZoneView> out;
  out.reserve(views.size());
  for (auto& [zone, v] : views) out.push_back(std::move(v));
  return out;
}

// Partition that places every bus in one zone.
inline ZonePartition single_zone_partition(const NetworkCase& c, ZoneId id = 1) {
  ZonePartition part;
  for (BusId b : c.buses) part.assignment[b] = id;
  return part;
}

}  // namespace dpopf
