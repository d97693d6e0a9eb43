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

// Centralized DC optimal power flow, the reference every distributed run is
// measured against.

#include <stdexcept>
#include <string>
#include <vector>

#include "dpopf/case_model.hpp"
#include "dpopf/qp.hpp"

namespace dpopf {

// A QP that did not reach an optimal status where one was required.
class SolverError : public std::runtime_error {
 public:
  SolverError(QpStatus status, const std::string& what)
      : std::runtime_error(what + " (" + to_string(status) + ")"),
        status_(status) {}
  QpStatus status() const { return status_; }

 private:
  QpStatus status_;
};

struct OpfSolution {
  std::vector<double> p;      // per generator, p.u.
  std::vector<double> theta;  // per bus, rad
  std::vector<double> flows;  // per line, p.u., positive from -> to
  std::vector<double> lmp;    // balance duals per bus
  double cost = 0.0;
  QpSolution qp;
};

struct CentralizedProblem {
  QpProblem qp;
  std::size_t num_gens = 0;
  std::size_t num_buses = 0;
};

// Variables are [p (gens) | theta (buses)].
inline CentralizedProblem assemble_centralized(const NetworkCase& c) {
  const auto ng = static_cast<Eigen::Index>(c.gens.size());
  const auto nb = static_cast<Eigen::Index>(c.num_buses());
  const Eigen::Index n = ng + nb;
  const MatrixXd B = build_laplacian(c);

  CentralizedProblem out;
  out.num_gens = c.gens.size();
  out.num_buses = c.num_buses();
  QpProblem& p = out.qp;
  p.Q = MatrixXd::Zero(n, n);
  p.q = VectorXd::Zero(n);
  for (Eigen::Index g = 0; g < ng; ++g) {
    p.Q(g, g) = 2.0 * c.gens[g].c2;
    p.q[g] = c.gens[g].c1;
  }

  // Nodal balance B theta - p_at_bus = -d, then theta_slack = 0, then fixed
  // generators.
  std::vector<Eigen::Index> fixed;
  for (Eigen::Index g = 0; g < ng; ++g) {
    if (c.gens[g].p_min == c.gens[g].p_max) fixed.push_back(g);
  }
  const Eigen::Index me = nb + 1 + static_cast<Eigen::Index>(fixed.size());
  p.A = MatrixXd::Zero(me, n);
  p.b = VectorXd::Zero(me);
  p.A.block(0, ng, nb, nb) = B;
  for (Eigen::Index g = 0; g < ng; ++g) {
    p.A(static_cast<Eigen::Index>(c.index_of(c.gens[g].bus)), g) = -1.0;
  }
  for (Eigen::Index i = 0; i < nb; ++i) p.b[i] = -c.loads[i];
  p.A(nb, ng + static_cast<Eigen::Index>(c.index_of(c.slack_bus))) = 1.0;
  for (std::size_t k = 0; k < fixed.size(); ++k) {
    const Eigen::Index row = nb + 1 + static_cast<Eigen::Index>(k);
    p.A(row, fixed[k]) = 1.0;
    p.b[row] = c.gens[fixed[k]].p_max;
  }

  // Generator limits, then both directions of every line limit.
  const Eigen::Index nfree = ng - static_cast<Eigen::Index>(fixed.size());
  const auto nl = static_cast<Eigen::Index>(c.lines.size());
  p.G = MatrixXd::Zero(2 * nfree + 2 * nl, n);
  p.h = VectorXd::Zero(2 * nfree + 2 * nl);
  Eigen::Index row = 0;
  for (Eigen::Index g = 0; g < ng; ++g) {
    if (c.gens[g].p_min == c.gens[g].p_max) continue;
    p.G(row, g) = 1.0;
    p.h[row++] = c.gens[g].p_max;
    p.G(row, g) = -1.0;
    p.h[row++] = -c.gens[g].p_min;
  }
  for (const Line& ln : c.lines) {
    const Eigen::Index s = ng + static_cast<Eigen::Index>(c.index_of(ln.from));
    const Eigen::Index r = ng + static_cast<Eigen::Index>(c.index_of(ln.to));
    p.G(row, s) = ln.susceptance;
    p.G(row, r) = -ln.susceptance;
    p.h[row++] = ln.capacity;
    p.G(row, s) = -ln.susceptance;
    p.G(row, r) = ln.susceptance;
    p.h[row++] = ln.capacity;
  }
  return out;
}

inline std::vector<double> line_flows(const NetworkCase& c,
                                      const std::vector<double>& theta) {
  std::vector<double> f;
  f.reserve(c.lines.size());
  for (const Line& ln : c.lines) {
    f.push_back(ln.susceptance *
                (theta[c.index_of(ln.from)] - theta[c.index_of(ln.to)]));
  }
  return f;
}

// Throws SolverError when the QP is not solved to optimality.
inline OpfSolution solve_centralized(const NetworkCase& c,
                                     const QpTolerances& tol = {}) {
  const CentralizedProblem prob = assemble_centralized(c);
  OpfSolution sol;
  sol.qp = solve_qp(prob.qp, tol);
  if (sol.qp.status != QpStatus::Optimal) {
    throw SolverError(sol.qp.status, "centralized DC-OPF");
  }
  const auto ng = static_cast<Eigen::Index>(prob.num_gens);
  for (Eigen::Index g = 0; g < ng; ++g) sol.p.push_back(sol.qp.x[g]);
  for (std::size_t i = 0; i < prob.num_buses; ++i) {
    sol.theta.push_back(sol.qp.x[ng + static_cast<Eigen::Index>(i)]);
    sol.lmp.push_back(sol.qp.lambda_eq[static_cast<Eigen::Index>(i)]);
  }
  sol.theta[c.index_of(c.slack_bus)] = 0.0;  // pinned; drop round-off
  sol.flows = line_flows(c, sol.theta);
  sol.cost = c.total_cost(sol.p);
  return sol;
}

}  // namespace dpopf
