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

// Consensus ADMM over zone sub-problems. Each zone owns a copy of the angles
// on its extended bus set; copies of boundary angles are driven to agree with
// a shared consensus vector.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpopf/case_io.hpp"
#include "dpopf/case_model.hpp"
#include "dpopf/opf.hpp"
#include "dpopf/parallel.hpp"
#include "dpopf/qp.hpp"
#include "dpopf/zones.hpp"

namespace dpopf {

// rho and tol are stated for angles measured in rad * angle_scale, the unit
// a per-unit susceptance matrix produces when injections are in MW. Zero
// selects the case's base_mva. Released angles, duals and noise stay in rad.
struct AdmmConfig {
  double rho = 100.0;
  int max_iters = 300;
  double tol = 0.5;
  double angle_scale = 0.0;
  // Starting consensus over ConsensusIndex::buses and starting duals per zone
  // over M_z. Empty means all zeros.
  std::vector<double> initial_consensus;
  std::vector<std::vector<double>> initial_duals;
  // Keep every zone's inputs and outputs for every iteration.
  bool record_history = false;
  QpTolerances qp;

  void validate() const {
    if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
    if (!(angle_scale >= 0.0)) {
      throw std::invalid_argument("angle_scale must be >= 0");
    }
  }

  double scale_for(const NetworkCase& c) const {
    return angle_scale > 0.0 ? angle_scale : c.base_mva;
  }
  // Penalty applied to angles in rad.
  double rho_rad(const NetworkCase& c) const {
    const double s = scale_for(c);
    return rho * s * s;
  }
};

// Union of all zones' boundary sets and, per zone, the position of each M_z
// entry in that union.
struct ConsensusIndex {
  std::vector<BusId> buses;
  std::vector<std::vector<std::size_t>> to_global;
  std::vector<int> coverage;  // number of zones holding each bus

  explicit ConsensusIndex(const std::vector<ZoneView>& zones) {
    std::map<BusId, int> count;
    for (const ZoneView& z : zones) {
      for (BusId b : z.boundary) ++count[b];
    }
    for (const auto& [bus, n] : count) {
      buses.push_back(bus);
      coverage.push_back(n);
    }
    for (const ZoneView& z : zones) {
      std::vector<std::size_t> map;
      for (BusId b : z.boundary) {
        map.push_back(static_cast<std::size_t>(
            std::lower_bound(buses.begin(), buses.end(), b) - buses.begin()));
      }
      to_global.push_back(std::move(map));
    }
  }

  std::size_t size() const { return buses.size(); }

  VectorXd restrict(std::size_t zone, const VectorXd& global) const {
    const auto& map = to_global[zone];
    VectorXd out(static_cast<Eigen::Index>(map.size()));
    for (std::size_t m = 0; m < map.size(); ++m) {
      out[static_cast<Eigen::Index>(m)] = global[static_cast<Eigen::Index>(map[m])];
    }
    return out;
  }
};

// theta_bar_i = (sum_z theta_tilde_iz - (1/rho) sum_z mu_iz) / |{z : i in M_z}|
inline VectorXd consensus_update(const ConsensusIndex& index,
                                 const std::vector<VectorXd>& released,
                                 const std::vector<VectorXd>& duals, double rho) {
  VectorXd sum = VectorXd::Zero(static_cast<Eigen::Index>(index.size()));
  for (std::size_t z = 0; z < index.to_global.size(); ++z) {
    const auto& map = index.to_global[z];
    for (std::size_t m = 0; m < map.size(); ++m) {
      const auto i = static_cast<Eigen::Index>(map[m]);
      const auto mi = static_cast<Eigen::Index>(m);
      sum[i] += released[z][mi] - duals[z][mi] / rho;
    }
  }
  for (std::size_t i = 0; i < index.size(); ++i) {
    sum[static_cast<Eigen::Index>(i)] /= index.coverage[i];
  }
  return sum;
}

inline VectorXd dual_update(const VectorXd& dual, const VectorXd& consensus_z,
                            const VectorXd& released_z, double rho) {
  return dual + rho * (consensus_z - released_z);
}

// QP for one zone at one iteration. Variables are [p (local gens) | theta
// (extended buses)].
struct ZoneSubproblem {
  QpProblem qp;
  std::size_t num_gens = 0;
  std::size_t num_angles = 0;
  // QP variable index of each boundary bus, aligned with ZoneView::boundary.
  std::vector<Eigen::Index> boundary_vars;

  Eigen::Index theta_var(std::size_t extended_pos) const {
    return static_cast<Eigen::Index>(num_gens + extended_pos);
  }
  // Balance row of the r-th domestic bus; its right-hand side is -d.
  static Eigen::Index balance_row(std::size_t domestic_pos) {
    return static_cast<Eigen::Index>(domestic_pos);
  }
};

// Minimizes c_z(p) - mu' theta_M + rho/2 |theta_bar - theta_M|^2 over F_z.
// Throws CaseError when the zone has no boundary and does not hold the slack,
// since its angles would then be unconstrained.
inline ZoneSubproblem assemble_subproblem(const ZoneView& zone,
                                          const VectorXd& consensus,
                                          const VectorXd& dual, double rho) {
  const auto nm = static_cast<Eigen::Index>(zone.boundary.size());
  if (consensus.size() != nm || dual.size() != nm) {
    throw std::invalid_argument("consensus and dual must be sized to M_z");
  }
  if (zone.boundary.empty() && !zone.contains_slack()) {
    throw CaseError("zones." + std::to_string(zone.zone_id),
                    "zone has no boundary and no reference angle");
  }

  ZoneSubproblem sp;
  sp.num_gens = zone.local_gens.size();
  sp.num_angles = zone.extended.size();
  const auto ng = static_cast<Eigen::Index>(sp.num_gens);
  const auto nv = static_cast<Eigen::Index>(sp.num_angles);
  const Eigen::Index n = ng + nv;
  QpProblem& p = sp.qp;

  p.Q = MatrixXd::Zero(n, n);
  p.q = VectorXd::Zero(n);
  for (Eigen::Index g = 0; g < ng; ++g) {
    p.Q(g, g) = 2.0 * zone.local_gens[g].c2;
    p.q[g] = zone.local_gens[g].c1;
  }
  for (Eigen::Index m = 0; m < nm; ++m) {
    const Eigen::Index v = sp.theta_var(*zone.extended_pos(zone.boundary[m]));
    sp.boundary_vars.push_back(v);
    p.Q(v, v) += rho;
    p.q[v] += -dual[m] - rho * consensus[m];
  }

  std::vector<Eigen::Index> fixed;
  for (Eigen::Index g = 0; g < ng; ++g) {
    if (zone.local_gens[g].p_min == zone.local_gens[g].p_max) fixed.push_back(g);
  }
  const auto nr = static_cast<Eigen::Index>(zone.domestic.size());
  const bool pin = zone.contains_slack();
  const Eigen::Index me = nr + (pin ? 1 : 0) + static_cast<Eigen::Index>(fixed.size());
  p.A = MatrixXd::Zero(me, n);
  p.b = VectorXd::Zero(me);
  p.A.block(0, ng, nr, nv) = zone.local_laplacian_rows;
  for (Eigen::Index g = 0; g < ng; ++g) {
    p.A(static_cast<Eigen::Index>(*zone.domestic_pos(zone.local_gens[g].bus)), g) = -1.0;
  }
  for (Eigen::Index r = 0; r < nr; ++r) p.b[r] = -zone.local_loads[r];
  Eigen::Index row = nr;
  if (pin) p.A(row++, sp.theta_var(*zone.extended_pos(zone.slack_bus))) = 1.0;
  for (Eigen::Index g : fixed) {
    p.A(row, g) = 1.0;
    p.b[row++] = zone.local_gens[g].p_max;
  }

  const Eigen::Index nfree = ng - static_cast<Eigen::Index>(fixed.size());
  const auto nl = static_cast<Eigen::Index>(zone.local_lines.size());
  p.G = MatrixXd::Zero(2 * nfree + 2 * nl, n);
  p.h = VectorXd::Zero(2 * nfree + 2 * nl);
  row = 0;
  for (Eigen::Index g = 0; g < ng; ++g) {
    const Gen& gen = zone.local_gens[g];
    if (gen.p_min == gen.p_max) continue;
    p.G(row, g) = 1.0;
    p.h[row++] = gen.p_max;
    p.G(row, g) = -1.0;
    p.h[row++] = -gen.p_min;
  }
  for (const Line& ln : zone.local_lines) {
    const Eigen::Index s = sp.theta_var(*zone.extended_pos(ln.from));
    const Eigen::Index r = sp.theta_var(*zone.extended_pos(ln.to));
    p.G(row, s) = ln.susceptance;
    p.G(row, r) = -ln.susceptance;
    p.h[row++] = ln.capacity;
    p.G(row, s) = -ln.susceptance;
    p.G(row, r) = ln.susceptance;
    p.h[row++] = ln.capacity;
  }
  return sp;
}

// Largest violation of the zone's feasible set F_z by (p, theta), evaluated
// directly from network data: balance on domestic buses, generator limits,
// line limits and the reference angle.
inline double zone_constraint_violation(const ZoneView& zone, const VectorXd& p,
                                        const VectorXd& theta) {
  double worst = 0.0;
  VectorXd injection = zone.local_laplacian_rows * theta;
  for (std::size_t r = 0; r < zone.domestic.size(); ++r) {
    injection[static_cast<Eigen::Index>(r)] += zone.local_loads[r];
  }
  for (std::size_t g = 0; g < zone.local_gens.size(); ++g) {
    const Gen& gen = zone.local_gens[g];
    const double pg = p[static_cast<Eigen::Index>(g)];
    injection[static_cast<Eigen::Index>(*zone.domestic_pos(gen.bus))] -= pg;
    worst = std::max({worst, gen.p_min - pg, pg - gen.p_max});
  }
  if (injection.size() > 0) worst = std::max(worst, injection.cwiseAbs().maxCoeff());
  for (const Line& ln : zone.local_lines) {
    const double f = ln.susceptance *
                     (theta[static_cast<Eigen::Index>(*zone.extended_pos(ln.from))] -
                      theta[static_cast<Eigen::Index>(*zone.extended_pos(ln.to))]);
    worst = std::max(worst, std::abs(f) - ln.capacity);
  }
  if (zone.contains_slack()) {
    worst = std::max(
        worst, std::abs(theta[static_cast<Eigen::Index>(*zone.extended_pos(zone.slack_bus))]));
  }
  return worst;
}

// What a zone sees when it prepares its release at iteration k.
struct NoiseRequest {
  std::size_t zone_index = 0;
  const ZoneView* zone = nullptr;
  int iter = 0;
  const VectorXd* consensus = nullptr;  // theta_bar^k on M_z
  const VectorXd* dual = nullptr;       // mu_z^k
  double rho = 0.0;  // applied to rad
};

struct NoiseSample {
  VectorXd xi;
  double scale = 0.0;
  // Local sensitivity behind `scale`, when one was computed.
  double sensitivity = std::numeric_limits<double>::quiet_NaN();
  BusId argmax_bus = 0;
  int argmax_sign = 0;
};

// Perturbation applied to released boundary angles. Noise is added after the
// constrained solve and never enters F_z.
struct NoisePlan {
  enum class Kind { None, Static, Dynamic };
  Kind kind = Kind::None;
  // Static: one vector per zone, reused on every iteration.
  std::vector<VectorXd> static_noise;
  std::vector<double> static_scale;
  // Dynamic: called once per zone and iteration; must be safe to call
  // concurrently for distinct zones.
  std::function<NoiseSample(const NoiseRequest&)> dynamic;

  static NoisePlan none() { return {}; }
};

struct ZoneIterate {
  VectorXd consensus_in;  // theta_bar^k on M_z
  VectorXd dual_in;       // mu_z^k
  VectorXd p;             // local gens
  VectorXd theta;         // over V_z
  VectorXd released;      // theta_tilde on M_z
};

struct IterationRecord {
  int iter = 0;
  double residual = 0.0;
  double cost_estimate = 0.0;
  std::vector<QpStatus> status;        // per zone
  std::vector<NoiseSample> noise;      // per zone; xi left empty
  std::vector<ZoneIterate> zones;      // only with record_history
};

struct AdmmState {
  int iter = 0;
  std::vector<VectorXd> theta;     // per zone, over V_z
  std::vector<VectorXd> released;  // per zone, over M_z
  VectorXd consensus;              // over ConsensusIndex::buses
  std::vector<VectorXd> duals;     // per zone, over M_z
  std::vector<double> residuals;  // in rad * angle_scale
  std::vector<double> p;           // per NetworkCase generator
  bool converged = false;
  double cost = 0.0;
};

struct AdmmResult {
  AdmmState state;
  std::vector<IterationRecord> trace;
  std::vector<ZoneView> zones;
  ConsensusIndex index{std::vector<ZoneView>{}};
  double rho_rad = 0.0;
  double angle_scale = 1.0;
};

// Repeats until the residual drops to tol or max_iters iterations have run.
// Non-convergence is reported through state.converged; an infeasible zone
// solve throws SolverError.
inline AdmmResult run_admm(const NetworkCase& c, const ZonePartition& part,
                           const AdmmConfig& cfg,
                           const NoisePlan& noise = NoisePlan::none()) {
  cfg.validate();
  AdmmResult res;
  res.zones = build_zone_views(c, part);
  res.index = ConsensusIndex(res.zones);
  const auto& zones = res.zones;
  const ConsensusIndex& index = res.index;
  const std::size_t nz = zones.size();
  const double rho = cfg.rho_rad(c);
  res.rho_rad = rho;
  res.angle_scale = cfg.scale_for(c);
  if (noise.kind == NoisePlan::Kind::Static && noise.static_noise.size() != nz) {
    throw std::invalid_argument("static noise plan does not match zone count");
  }
  if (noise.kind == NoisePlan::Kind::Dynamic && !noise.dynamic) {
    throw std::invalid_argument("dynamic noise plan without sampler");
  }

  AdmmState& st = res.state;
  st.consensus = VectorXd::Zero(static_cast<Eigen::Index>(index.size()));
  if (!cfg.initial_consensus.empty()) {
    if (cfg.initial_consensus.size() != index.size()) {
      throw std::invalid_argument("initial consensus has wrong length");
    }
    st.consensus = Eigen::Map<const VectorXd>(cfg.initial_consensus.data(),
                                              static_cast<Eigen::Index>(index.size()));
  }
  st.duals.resize(nz);
  st.theta.resize(nz);
  st.released.resize(nz);
  for (std::size_t z = 0; z < nz; ++z) {
    const auto nm = static_cast<Eigen::Index>(zones[z].boundary.size());
    st.duals[z] = VectorXd::Zero(nm);
    if (!cfg.initial_duals.empty()) {
      if (cfg.initial_duals.size() != nz ||
          cfg.initial_duals[z].size() != static_cast<std::size_t>(nm)) {
        throw std::invalid_argument("initial duals have wrong shape");
      }
      st.duals[z] = Eigen::Map<const VectorXd>(cfg.initial_duals[z].data(), nm);
    }
  }
  st.p.assign(c.gens.size(), 0.0);

  std::vector<ZoneSubproblem> sub(nz);
  std::vector<QpSolution> sol(nz);
  std::vector<NoiseSample> drawn(nz);
  std::vector<VectorXd> consensus_z(nz);

  for (int k = 1; k <= cfg.max_iters; ++k) {
    for (std::size_t z = 0; z < nz; ++z) consensus_z[z] = index.restrict(z, st.consensus);

    parallel_for(nz, [&](std::size_t z) {
      sub[z] = assemble_subproblem(zones[z], consensus_z[z], st.duals[z], rho);
      sol[z] = solve_qp(sub[z].qp, cfg.qp);
      drawn[z] = NoiseSample{};
      if (sol[z].status != QpStatus::Optimal) return;
      const auto nm = static_cast<Eigen::Index>(zones[z].boundary.size());
      switch (noise.kind) {
        case NoisePlan::Kind::None:
          drawn[z].xi = VectorXd::Zero(nm);
          break;
        case NoisePlan::Kind::Static:
          drawn[z].xi = noise.static_noise[z];
          drawn[z].scale = noise.static_scale.empty() ? 0.0 : noise.static_scale[z];
          break;
        case NoisePlan::Kind::Dynamic:
          drawn[z] = noise.dynamic(NoiseRequest{z, &zones[z], k, &consensus_z[z],
                                                &st.duals[z], rho});
          break;
      }
      if (drawn[z].xi.size() != nm) {
        throw std::invalid_argument("noise vector does not match boundary size");
      }
    });

    IterationRecord rec;
    rec.iter = k;
    for (std::size_t z = 0; z < nz; ++z) {
      rec.status.push_back(sol[z].status);
      if (sol[z].status != QpStatus::Optimal) {
        throw SolverError(sol[z].status,
                          "zone " + std::to_string(zones[z].zone_id) +
                              " sub-problem at iteration " + std::to_string(k));
      }
    }

    std::vector<VectorXd> duals_in;
    if (cfg.record_history) duals_in = st.duals;
    for (std::size_t z = 0; z < nz; ++z) {
      const ZoneSubproblem& s = sub[z];
      const VectorXd& x = sol[z].x;
      st.theta[z] = x.segment(static_cast<Eigen::Index>(s.num_gens),
                              static_cast<Eigen::Index>(s.num_angles));
      VectorXd out(static_cast<Eigen::Index>(s.boundary_vars.size()));
      for (std::size_t m = 0; m < s.boundary_vars.size(); ++m) {
        out[static_cast<Eigen::Index>(m)] = x[s.boundary_vars[m]];
      }
      st.released[z] = out + drawn[z].xi;
      for (std::size_t g = 0; g < s.num_gens; ++g) {
        st.p[zones[z].gen_index[g]] = x[static_cast<Eigen::Index>(g)];
      }
    }

    st.consensus = consensus_update(index, st.released, st.duals, rho);
    double residual = 0.0;
    for (std::size_t z = 0; z < nz; ++z) {
      const VectorXd bar = index.restrict(z, st.consensus);
      residual += res.angle_scale * (st.released[z] - bar).norm();
      st.duals[z] = dual_update(st.duals[z], bar, st.released[z], rho);
    }

    st.iter = k;
    st.residuals.push_back(residual);
    st.cost = c.total_cost(st.p);
    rec.residual = residual;
    rec.cost_estimate = st.cost;
    for (std::size_t z = 0; z < nz; ++z) {
      NoiseSample meta = drawn[z];
      meta.xi.resize(0);
      rec.noise.push_back(std::move(meta));
    }
    if (cfg.record_history) {
      for (std::size_t z = 0; z < nz; ++z) {
        ZoneIterate zi;
        zi.consensus_in = consensus_z[z];
        zi.dual_in = duals_in[z];
        zi.p = sol[z].x.head(static_cast<Eigen::Index>(sub[z].num_gens));
        zi.theta = st.theta[z];
        zi.released = st.released[z];
        rec.zones.push_back(std::move(zi));
      }
    }
    res.trace.push_back(std::move(rec));

    if (residual <= cfg.tol) {
      st.converged = true;
      break;
    }
  }
  return res;
}

// CSV with one row per iteration: iter, residual, cost_estimate and the solve
// status of every zone.
inline void write_trace_csv(std::ostream& out, const AdmmResult& res) {
  out << "iter,residual,cost_estimate";
  for (const ZoneView& z : res.zones) out << ",status_zone" << z.zone_id;
  out << "\n";
  out.precision(17);
  for (const IterationRecord& r : res.trace) {
    out << r.iter << "," << r.residual << "," << r.cost_estimate;
    for (QpStatus s : r.status) out << "," << to_string(s);
    out << "\n";
  }
}

}  // namespace dpopf
