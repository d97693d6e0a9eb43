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

// Load inference from observed coordination signals: given the inputs a zone
// received and the angles it released over T iterations, plus every load but
// one, find the remaining load that best explains the releases.

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpopf/admm.hpp"
#include "dpopf/algorithms.hpp"
#include "dpopf/opf.hpp"
#include "dpopf/parallel.hpp"
#include "dpopf/privacy.hpp"

namespace dpopf {

// Inputs a zone received on one iteration and the angles it released.
struct AttackRound {
  VectorXd consensus_in;  // theta_bar^t on M_z
  VectorXd dual_in;       // mu_z^t
  VectorXd released;      // theta_tilde_z^{t+1} on M_z
};

struct AttackObservation {
  // Topology, costs and the known loads; the entry for the target is unused.
  ZoneView zone;
  BusId target_bus = 0;
  std::vector<AttackRound> rounds;
  double rho = 0.0;  // applied to angles in rad
  // Weight of the squared distance to the released angles, stated for
  // angles in rad * angle_scale like rho in AdmmConfig.
  double upsilon = 1e6;
  double angle_scale = 1.0;

  void validate() const {
    if (!zone.domestic_pos(target_bus)) {
      throw std::invalid_argument("target bus " + std::to_string(target_bus) +
                                  " is not a domestic bus of zone " +
                                  std::to_string(zone.zone_id));
    }
    if (rounds.empty()) throw std::invalid_argument("at least one observed round is required");
    const auto nm = static_cast<Eigen::Index>(zone.boundary.size());
    for (const AttackRound& r : rounds) {
      if (r.consensus_in.size() != nm || r.dual_in.size() != nm || r.released.size() != nm) {
        throw std::invalid_argument("observed vectors must have one entry per boundary bus");
      }
    }
    if (!(rho > 0.0) || !(upsilon >= 0.0) || !(angle_scale > 0.0)) {
      throw std::invalid_argument("rho, upsilon and angle_scale must be positive");
    }
  }

  double upsilon_rad() const { return upsilon * angle_scale * angle_scale; }
};

struct AttackProblem {
  QpProblem qp;
  double constant = 0.0;  // objective offset dropped from qp
  std::size_t rounds = 0;
  Eigen::Index block = 0;  // variables per round: [p | theta over V_z]
  Eigen::Index load_var = 0;
  std::vector<Eigen::Index> boundary_vars;  // within a round's block
  std::size_t num_gens = 0;
};

// Variables are [round 0 | round 1 | ... | d_hat]. Each round carries the
// zone sub-problem at that round's inputs with the target's balance row moved
// onto d_hat, plus upsilon * ||theta_hat_M - theta_tilde||^2.
inline AttackProblem build_attack_problem(const AttackObservation& obs) {
  obs.validate();
  const auto nt = static_cast<Eigen::Index>(obs.rounds.size());
  const auto nm = static_cast<Eigen::Index>(obs.zone.boundary.size());
  const auto target_row =
      ZoneSubproblem::balance_row(*obs.zone.domestic_pos(obs.target_bus));
  const double w = obs.upsilon_rad();

  std::vector<ZoneSubproblem> sp;
  for (const AttackRound& r : obs.rounds) {
    sp.push_back(assemble_subproblem(obs.zone, r.consensus_in, r.dual_in, obs.rho));
  }
  const QpProblem& p0 = sp.front().qp;
  const Eigen::Index nb = p0.num_vars();
  const Eigen::Index me = p0.num_eq();
  const Eigen::Index mi = p0.num_ineq();

  AttackProblem out;
  out.rounds = obs.rounds.size();
  out.block = nb;
  out.load_var = nt * nb;
  out.boundary_vars = sp.front().boundary_vars;
  out.num_gens = sp.front().num_gens;
  const Eigen::Index n = out.load_var + 1;
  const Eigen::Index mi_total = nt * mi;

  QpProblem& q = out.qp;
  q.Q = MatrixXd::Zero(n, n);
  q.q = VectorXd::Zero(n);
  q.A = MatrixXd::Zero(nt * me, n);
  q.b = VectorXd::Zero(nt * me);
  q.G = MatrixXd::Zero(mi_total, n);
  q.h = VectorXd::Zero(mi_total);

  for (Eigen::Index t = 0; t < nt; ++t) {
    const QpProblem& p = sp[static_cast<std::size_t>(t)].qp;
    const VectorXd& rel = obs.rounds[static_cast<std::size_t>(t)].released;
    const Eigen::Index off = t * nb;
    q.Q.block(off, off, nb, nb) = p.Q;
    q.q.segment(off, nb) = p.q;
    q.A.block(t * me, off, me, nb) = p.A;
    q.b.segment(t * me, me) = p.b;
    q.A(t * me + target_row, out.load_var) = 1.0;
    q.b[t * me + target_row] = 0.0;
    q.G.block(t * mi, off, mi, nb) = p.G;
    q.h.segment(t * mi, mi) = p.h;

    for (Eigen::Index m = 0; m < nm; ++m) {
      const Eigen::Index v = off + out.boundary_vars[static_cast<std::size_t>(m)];
      q.Q(v, v) += 2.0 * w;
      q.q[v] -= 2.0 * w * rel[m];
      out.constant += w * rel[m] * rel[m];
    }
  }
  return out;
}

struct AttackResult {
  double inferred_load = 0.0;  // p.u., clamped at 0
  double raw_load = 0.0;       // before clamping
  double objective = 0.0;
  std::vector<VectorXd> p;      // per round, local gens
  std::vector<VectorXd> theta;  // per round, over V_z
  QpStatus status = QpStatus::MaxIterations;
};

inline AttackResult infer_load(const AttackObservation& obs, const QpTolerances& tol = {}) {
  const AttackProblem prob = build_attack_problem(obs);
  const QpSolution s = solve_qp(prob.qp, tol);
  AttackResult r;
  r.status = s.status;
  r.objective = s.objective + prob.constant;
  r.raw_load = s.x[prob.load_var];
  r.inferred_load = std::max(0.0, r.raw_load);
  const auto ng = static_cast<Eigen::Index>(prob.num_gens);
  for (std::size_t t = 0; t < prob.rounds; ++t) {
    const VectorXd blk = s.x.segment(static_cast<Eigen::Index>(t) * prob.block, prob.block);
    r.p.push_back(blk.head(ng));
    r.theta.push_back(blk.tail(prob.block - ng));
  }
  return r;
}

// Observation of zone `zone_index` over the iterations [first, first + count)
// of a run recorded with history.
inline AttackObservation observe(const AdmmResult& run, std::size_t zone_index, BusId target,
                                 std::size_t first, std::size_t count) {
  if (first + count > run.trace.size()) {
    throw std::invalid_argument("observed iterations exceed the run length");
  }
  AttackObservation obs;
  obs.zone = run.zones.at(zone_index);
  obs.target_bus = target;
  obs.rho = run.rho_rad;
  obs.angle_scale = run.angle_scale;
  for (std::size_t k = first; k < first + count; ++k) {
    const IterationRecord& rec = run.trace[k];
    if (rec.zones.empty()) throw std::invalid_argument("run was not recorded with history");
    const ZoneIterate& zi = rec.zones[zone_index];
    obs.rounds.push_back({zi.consensus_in, zi.dual_in, zi.released});
  }
  return obs;
}

// The last `budget` iterations of a run, or all of them if it stopped sooner.
inline AttackObservation observe_last(const AdmmResult& run, std::size_t zone_index,
                                      BusId target, std::size_t budget) {
  const std::size_t count = std::min(budget, run.trace.size());
  return observe(run, zone_index, target, run.trace.size() - count, count);
}

// Zone holding `bus` as a domestic bus.
inline std::size_t zone_of(const std::vector<ZoneView>& zones, BusId bus) {
  for (std::size_t z = 0; z < zones.size(); ++z) {
    if (zones[z].domestic_pos(bus)) return z;
  }
  throw std::invalid_argument("bus " + std::to_string(bus) + " is in no zone");
}

// Mean |d_hat - d| over runs; rows follow alphas, columns follow budgets.
struct ErrorMatrix {
  std::vector<double> alphas;
  std::vector<int> budgets;
  std::vector<std::vector<double>> mean_error;  // p.u.
  // inferred[a][t][run], p.u.
  std::vector<std::vector<std::vector<double>>> inferred;
  double true_load = 0.0;
  double base_mva = 100.0;
};

struct SweepSettings {
  Algorithm algorithm = Algorithm::DpAdmm;
  AdmmConfig admm;
  PrivacyParams privacy;  // alpha_frac and attack_budget are overridden
  BusId target_bus = 0;
  std::vector<int> budgets{1};
  std::vector<double> alphas{0.0};
  int runs = 1;
  double upsilon = 1e6;
};

// Run r of every setting uses seed privacy.seed + r. With composition
// scaling on, each budget T gets its own runs calibrated to that T.
inline ErrorMatrix attack_sweep(const NetworkCase& c, const ZonePartition& part,
                                const SweepSettings& s) {
  if (s.runs < 1) throw std::invalid_argument("runs must be >= 1");
  if (s.budgets.empty() || s.alphas.empty()) {
    throw std::invalid_argument("at least one budget and one alpha are required");
  }
  for (int t : s.budgets) {
    if (t < 1) throw std::invalid_argument("budgets must be >= 1");
  }
  const std::vector<ZoneView> zones = build_zone_views(c, part);
  const std::size_t zi = zone_of(zones, s.target_bus);
  ErrorMatrix m;
  m.alphas = s.alphas;
  m.budgets = s.budgets;
  m.true_load = c.load_at(s.target_bus);
  m.base_mva = c.base_mva;
  const std::size_t na = s.alphas.size(), nt = s.budgets.size();
  const auto nr = static_cast<std::size_t>(s.runs);
  m.inferred.assign(na, std::vector<std::vector<double>>(nt, std::vector<double>(nr)));

  // One job per (alpha, run), plus per budget when the noise depends on T.
  const bool per_budget = s.privacy.scale_composition && s.algorithm != Algorithm::Admm;
  const std::size_t groups = per_budget ? nt : 1;
  parallel_for(na * nr * groups, [&](std::size_t job) {
    const std::size_t a = job / (nr * groups);
    const std::size_t r = (job / groups) % nr;
    const std::size_t g = job % groups;
    AdmmConfig cfg = s.admm;
    cfg.record_history = true;
    PrivacyParams pp = s.privacy;
    pp.alpha_frac = s.alphas[a];
    pp.seed = s.privacy.seed + r;
    if (per_budget) pp.attack_budget = s.budgets[g];
    const AdmmResult run = run_algorithm(c, part, s.algorithm, cfg, pp);
    for (std::size_t t = 0; t < nt; ++t) {
      if (per_budget && t != g) continue;
      AttackObservation obs =
          observe_last(run, zi, s.target_bus, static_cast<std::size_t>(s.budgets[t]));
      obs.upsilon = s.upsilon;
      const AttackResult res = infer_load(obs, cfg.qp);
      if (res.status != QpStatus::Optimal) {
        throw SolverError(res.status, "attack on bus " + std::to_string(s.target_bus));
      }
      m.inferred[a][t][r] = res.inferred_load;
    }
  });

  m.mean_error.assign(na, std::vector<double>(nt, 0.0));
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t t = 0; t < nt; ++t) {
      double sum = 0.0;
      for (double d : m.inferred[a][t]) sum += std::abs(d - m.true_load);
      m.mean_error[a][t] = sum / static_cast<double>(nr);
    }
  }
  return m;
}

// Header "alpha,<budgets>", one row per alpha; alpha as a fraction, errors
// in MW.
inline void write_error_matrix_csv(std::ostream& out, const ErrorMatrix& m) {
  const auto old = out.precision(17);
  out << "alpha";
  for (int t : m.budgets) out << ',' << t;
  out << '\n';
  for (std::size_t a = 0; a < m.alphas.size(); ++a) {
    out << m.alphas[a];
    for (double e : m.mean_error[a]) out << ',' << e * m.base_mva;
    out << '\n';
  }
  out.precision(old);
}

}  // namespace dpopf
