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

// Dense convex quadratic programming.
//
//   minimize    1/2 x'Qx + q'x
//   subject to  Ax  = b
//               Gx <= h
//
// Solved with a primal-dual interior-point method using Mehrotra's
// predictor-corrector. Equality constraints enter the reduced KKT system
// directly; Q only needs to be positive semidefinite.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpopf/parallel.hpp"

namespace dpopf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct QpProblem {
  MatrixXd Q;
  VectorXd q;
  MatrixXd A;
  VectorXd b;
  MatrixXd G;
  VectorXd h;

  Eigen::Index num_vars() const { return q.size(); }
  Eigen::Index num_eq() const { return b.size(); }
  Eigen::Index num_ineq() const { return h.size(); }

  double objective(const VectorXd& x) const {
    return 0.5 * x.dot(Q * x) + q.dot(x);
  }

  // Throws std::invalid_argument on inconsistent dimensions or asymmetric Q.
  void validate() const {
    const Eigen::Index n = q.size();
    if (Q.rows() != n || Q.cols() != n) {
      throw std::invalid_argument("QpProblem: Q must be " + std::to_string(n) +
                                  "x" + std::to_string(n));
    }
    if (A.rows() != b.size() || (A.rows() > 0 && A.cols() != n)) {
      throw std::invalid_argument("QpProblem: A/b dimension mismatch");
    }
    if (G.rows() != h.size() || (G.rows() > 0 && G.cols() != n)) {
      throw std::invalid_argument("QpProblem: G/h dimension mismatch");
    }
    if (n > 0 && (Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
      throw std::invalid_argument("QpProblem: Q is not symmetric");
    }
  }
};

enum class QpStatus { Optimal, Infeasible, MaxIterations };

inline const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Optimal:
      return "optimal";
    case QpStatus::Infeasible:
      return "infeasible";
    case QpStatus::MaxIterations:
      return "max_iterations";
  }
  return "unknown";
}

struct QpTolerances {
  double feas = 1e-8;
  double stat = 1e-8;
  double comp = 1e-8;
  int max_iters = 100;
  // Added to the primal block (and subtracted on the equality block) of the
  // KKT matrix only; the problem data is never modified.
  double regularization = 1e-10;
  // Rescale rows, columns and cost of the KKT matrix to unit size before
  // iterating.
  bool equilibrate = true;
};

struct QpSolution {
  VectorXd x;
  VectorXd lambda_eq;
  VectorXd mu_ineq;
  double objective = 0.0;
  QpStatus status = QpStatus::MaxIterations;
  int iterations = 0;
};

// Unscaled KKT residuals of a candidate solution.
struct KktResiduals {
  double primal_eq = 0.0;       // ||Ax - b||_inf
  double primal_ineq = 0.0;     // max(Gx - h, 0)
  double dual_sign = 0.0;       // max(-mu, 0)
  double stationarity = 0.0;    // ||Qx + q + A'lambda + G'mu||_inf
  double complementarity = 0.0; // max |mu_i (Gx - h)_i|
};

inline KktResiduals kkt_residuals(const QpProblem& p, const QpSolution& s) {
  KktResiduals r;
  VectorXd grad = p.Q * s.x + p.q;
  if (p.num_eq() > 0) {
    r.primal_eq = (p.A * s.x - p.b).cwiseAbs().maxCoeff();
    grad += p.A.transpose() * s.lambda_eq;
  }
  if (p.num_ineq() > 0) {
    const VectorXd gap = p.G * s.x - p.h;
    r.primal_ineq = std::max(0.0, gap.maxCoeff());
    r.dual_sign = std::max(0.0, -s.mu_ineq.minCoeff());
    r.complementarity = s.mu_ineq.cwiseProduct(gap).cwiseAbs().maxCoeff();
    grad += p.G.transpose() * s.mu_ineq;
  }
  r.stationarity = grad.size() > 0 ? grad.cwiseAbs().maxCoeff() : 0.0;
  return r;
}

namespace detail {

// Largest step in (0, 1] keeping v + step*dv >= 0.
inline double max_step(const VectorXd& v, const VectorXd& dv) {
  double step = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv[i] < 0.0) step = std::min(step, -v[i] / dv[i]);
  }
  return step;
}

inline double inf_norm(const VectorXd& v) {
  return v.size() > 0 ? v.cwiseAbs().maxCoeff() : 0.0;
}

inline double inf_norm(const MatrixXd& m) {
  return m.size() > 0 ? m.cwiseAbs().maxCoeff() : 0.0;
}

// Reduced KKT system [H A'; A -reg I] with iterative refinement against the
// unregularized matrix.
class ReducedKkt {
 public:
  ReducedKkt(const MatrixXd& H, const MatrixXd& A, double reg)
      : n_(H.rows()), m_(A.rows()) {
    K_.setZero(n_ + m_, n_ + m_);
    K_.topLeftCorner(n_, n_) = H;
    if (m_ > 0) {
      K_.topRightCorner(n_, m_) = A.transpose();
      K_.bottomLeftCorner(m_, n_) = A;
    }
    MatrixXd Kreg = K_;
    Kreg.diagonal().head(n_).array() += reg;
    if (m_ > 0) Kreg.diagonal().tail(m_).array() -= reg;
    lu_.compute(Kreg);
  }

  VectorXd solve(const VectorXd& rhs) const {
    VectorXd sol = lu_.solve(rhs);
    double last = inf_norm(VectorXd(rhs - K_ * sol));
    for (int refine = 0; refine < 10 && last > 0.0; ++refine) {
      const VectorXd next = sol + lu_.solve(rhs - K_ * sol);
      const double r = inf_norm(VectorXd(rhs - K_ * next));
      if (!(r < last)) break;
      sol = next;
      last = r;
    }
    return sol;
  }

 private:
  Eigen::Index n_;
  Eigen::Index m_;
  MatrixXd K_;
  Eigen::PartialPivLU<MatrixXd> lu_;
};

// Re-solves the KKT system with the constraints the interior-point iterate
// identifies as active held at equality. Replaces `sol` when the polished
// point is primal and dual feasible and no worse on any KKT residual.
inline void polish(const QpProblem& p, const VectorXd& slack,
                   const QpTolerances& tol, double scale_eq, QpSolution& sol) {
  const Eigen::Index n = p.num_vars();
  const Eigen::Index me = p.num_eq();
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < p.num_ineq(); ++i) {
    if (sol.mu_ineq[i] > slack[i]) active.push_back(i);
  }
  const Eigen::Index na = static_cast<Eigen::Index>(active.size());
  MatrixXd C(me + na, n);
  VectorXd d(me + na);
  if (me > 0) {
    C.topRows(me) = p.A;
    d.head(me) = p.b;
  }
  for (Eigen::Index k = 0; k < na; ++k) {
    C.row(me + k) = p.G.row(active[k]);
    d[me + k] = p.h[active[k]];
  }
  ReducedKkt kkt(p.Q, C, tol.regularization);
  VectorXd rhs(n + me + na);
  rhs << -p.q, d;
  const VectorXd x_y = kkt.solve(rhs);
  if (!x_y.allFinite()) return;

  QpSolution cand = sol;
  cand.x = x_y.head(n);
  cand.lambda_eq = x_y.segment(n, me);
  cand.mu_ineq.setZero();
  for (Eigen::Index k = 0; k < na; ++k) {
    cand.mu_ineq[active[k]] = x_y[n + me + k];
  }
  const KktResiduals before = kkt_residuals(p, sol);
  const KktResiduals after = kkt_residuals(p, cand);
  const double stat_scale =
      1.0 + std::max({inf_norm(VectorXd(p.Q * cand.x)), inf_norm(p.q),
                      inf_norm(VectorXd(p.G.transpose() * cand.mu_ineq)),
                      me > 0 ? inf_norm(VectorXd(p.A.transpose() * cand.lambda_eq))
                             : 0.0});
  const double ineq_scale = 1.0 + inf_norm(p.h);
  // Each residual must stay within its own tolerance or not get worse.
  auto ok = [](double a, double b, double limit) { return a <= std::max(b, limit); };
  if (ok(after.primal_eq, before.primal_eq, tol.feas * scale_eq) &&
      ok(after.primal_ineq, before.primal_ineq, tol.feas * ineq_scale) &&
      ok(after.dual_sign, before.dual_sign, 0.0) &&
      ok(after.stationarity, before.stationarity, tol.stat * stat_scale) &&
      ok(after.complementarity, before.complementarity,
         tol.comp * stat_scale)) {
    cand.objective = p.objective(cand.x);
    sol = std::move(cand);
  }
}

inline QpSolution solve_qp_core(const QpProblem& prob, const QpTolerances& tol) {
  const Eigen::Index n = prob.num_vars();
  const Eigen::Index me = prob.num_eq();
  const Eigen::Index mi = prob.num_ineq();

  QpSolution out;
  out.x = VectorXd::Zero(n);
  out.lambda_eq = VectorXd::Zero(me);
  out.mu_ineq = VectorXd::Zero(mi);

  // Residual scales; stopping tests are relative to the size of the data
  // that enters each residual.
  const double scale_eq = 1.0 + detail::inf_norm(prob.b);
  VectorXd scale_ineq = VectorXd::Ones(mi);
  for (Eigen::Index i = 0; i < mi; ++i) {
    scale_ineq[i] += std::abs(prob.h[i]);
  }

  // Starting point: minimizer of 1/2 x'(Q + I)x + q'x on Ax = b.
  {
    MatrixXd H = prob.Q;
    H.diagonal().array() += 1.0;
    detail::ReducedKkt kkt(H, prob.A, tol.regularization);
    VectorXd rhs(n + me);
    rhs << -prob.q, prob.b;
    const VectorXd sol = kkt.solve(rhs);
    out.x = sol.head(n);
    out.lambda_eq = sol.tail(me);
  }

  if (mi == 0) {
    // Equality-constrained: one Newton step from the start is exact.
    detail::ReducedKkt kkt(prob.Q, prob.A, tol.regularization);
    VectorXd rhs(n + me);
    rhs << -prob.q, prob.b;
    const VectorXd sol = kkt.solve(rhs);
    out.x = sol.head(n);
    out.lambda_eq = sol.tail(me);
    out.iterations = 1;
    const KktResiduals r = kkt_residuals(prob, out);
    const double stat_scale =
        1.0 + std::max({detail::inf_norm(VectorXd(prob.Q * out.x)),
                        detail::inf_norm(prob.q),
                        me > 0 ? detail::inf_norm(VectorXd(prob.A.transpose() *
                                                           out.lambda_eq))
                               : 0.0});
    if (r.primal_eq <= tol.feas * scale_eq &&
        r.stationarity <= tol.stat * stat_scale) {
      out.status = QpStatus::Optimal;
    } else if (r.primal_eq > tol.feas * scale_eq) {
      out.status = QpStatus::Infeasible;
    } else {
      out.status = QpStatus::MaxIterations;
    }
    out.objective = prob.objective(out.x);
    return out;
  }

  VectorXd& x = out.x;
  VectorXd& y = out.lambda_eq;
  VectorXd& z = out.mu_ineq;
  VectorXd s = prob.h - prob.G * x;
  for (Eigen::Index i = 0; i < mi; ++i) s[i] = std::max(s[i], 1.0);
  z = VectorXd::Ones(mi);

  const MatrixXd Gt = prob.G.transpose();
  const MatrixXd At = prob.A.transpose();
  const double data_scale =
      1.0 + std::max({detail::inf_norm(prob.q), detail::inf_norm(prob.h),
                      me > 0 ? detail::inf_norm(prob.b) : 0.0,
                      prob.Q.cwiseAbs().maxCoeff()});

  for (int iter = 0; iter < tol.max_iters; ++iter) {
    out.iterations = iter;

    const VectorXd Qx = prob.Q * x;
    const VectorXd Gtz = Gt * z;
    VectorXd r_d = Qx + prob.q + Gtz;
    VectorXd Aty;
    if (me > 0) {
      Aty = At * y;
      r_d += Aty;
    }
    const VectorXd r_e = me > 0 ? VectorXd(prob.A * x - prob.b) : VectorXd();
    const VectorXd r_i = prob.G * x + s - prob.h;
    const double mu = s.dot(z) / static_cast<double>(mi);

    const double stat_scale =
        1.0 + std::max({detail::inf_norm(Qx), detail::inf_norm(prob.q),
                        detail::inf_norm(Gtz),
                        me > 0 ? detail::inf_norm(Aty) : 0.0});
    bool ineq_ok = true;
    for (Eigen::Index i = 0; i < mi; ++i) {
      if (std::abs(r_i[i]) > tol.feas * scale_ineq[i]) {
        ineq_ok = false;
        break;
      }
    }
    const bool eq_ok = me == 0 || detail::inf_norm(r_e) <= tol.feas * scale_eq;
    const bool stat_ok = detail::inf_norm(r_d) <= tol.stat * stat_scale;
    const bool comp_ok =
        s.cwiseProduct(z).maxCoeff() <= tol.comp * std::max(1.0, stat_scale);
    if (eq_ok && ineq_ok && stat_ok && comp_ok) {
      out.status = QpStatus::Optimal;
      out.objective = prob.objective(x);
      detail::polish(prob, s, tol, scale_eq, out);
      return out;
    }

    // Farkas certificate: diverging duals with A'y + G'z -> 0 and
    // b'y + h'z < 0 prove the constraints inconsistent.
    const double dual_norm =
        std::max(detail::inf_norm(z), me > 0 ? detail::inf_norm(y) : 0.0);
    if (dual_norm > 1e6 * data_scale) {
      const VectorXd yh = me > 0 ? VectorXd(y / dual_norm) : VectorXd();
      const VectorXd zh = z / dual_norm;
      VectorXd ray = Gt * zh;
      double gap = prob.h.dot(zh);
      if (me > 0) {
        ray += At * yh;
        gap += prob.b.dot(yh);
      }
      if (detail::inf_norm(ray) < 1e-6 && gap < -1e-6) {
        out.status = QpStatus::Infeasible;
        out.objective = prob.objective(x);
        return out;
      }
    }

    const VectorXd w = z.cwiseQuotient(s);
    MatrixXd H = prob.Q + Gt * w.asDiagonal() * prob.G;
    detail::ReducedKkt kkt(H, prob.A, tol.regularization);

    // Solves the Newton system for a complementarity residual r_c and returns
    // (dx, dy, dz, ds).
    auto newton = [&](const VectorXd& r_c, VectorXd& dx, VectorXd& dy,
                      VectorXd& dz, VectorXd& ds) {
      const VectorXd t = w.cwiseProduct(r_i) - r_c.cwiseQuotient(s);
      VectorXd rhs(n + me);
      rhs.head(n) = -r_d - Gt * t;
      if (me > 0) rhs.tail(me) = -r_e;
      const VectorXd sol = kkt.solve(rhs);
      dx = sol.head(n);
      dy = sol.tail(me);
      dz = w.cwiseProduct(prob.G * dx + r_i) - r_c.cwiseQuotient(s);
      ds = -(r_c + s.cwiseProduct(dz)).cwiseQuotient(z);
    };

    VectorXd dx, dy, dz, ds;
    // Predictor (affine scaling).
    const VectorXd sz = s.cwiseProduct(z);
    newton(sz, dx, dy, dz, ds);
    const double a_aff =
        std::min(detail::max_step(s, ds), detail::max_step(z, dz));
    const double mu_aff =
        (s + a_aff * ds).dot(z + a_aff * dz) / static_cast<double>(mi);
    const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

    // Corrector with centering.
    const VectorXd r_c = sz + ds.cwiseProduct(dz) -
                         VectorXd::Constant(mi, sigma * mu);
    newton(r_c, dx, dy, dz, ds);
    double a_max = std::min(detail::max_step(s, ds), detail::max_step(z, dz));
    double step = std::min(1.0, 0.99 * a_max);

    // The second-order term can overshoot and make the gap grow; retry with
    // a plain centered step then.
    const double mu_new =
        (s + step * ds).dot(z + step * dz) / static_cast<double>(mi);
    if (mu_new > (1.0 - 0.01 * step) * mu) {
      const double sigma_c = std::max(sigma, 0.1);
      newton(sz - VectorXd::Constant(mi, sigma_c * mu), dx, dy, dz, ds);
      a_max = std::min(detail::max_step(s, ds), detail::max_step(z, dz));
      step = std::min(1.0, 0.99 * a_max);
      // Once feasible, far from the central path the second-order term can
      // still win; short enough steps always shrink the gap.
      for (int k = 0; k < 30 && eq_ok && ineq_ok && stat_ok; ++k) {
        const double m = (s + step * ds).dot(z + step * dz) / static_cast<double>(mi);
        if (m <= (1.0 - 0.01 * step) * mu) break;
        step *= 0.5;
      }
    }

    x += step * dx;
    if (me > 0) y += step * dy;
    z += step * dz;
    s += step * ds;
  }

  out.iterations = tol.max_iters;
  out.status = QpStatus::MaxIterations;
  out.objective = prob.objective(x);
  return out;
}

// Symmetric Ruiz equilibration of [Q A' G'; A 0 0; G 0 0] followed by a
// cost scale: the solver sees cost * (D Q D, D q), E A D, F G D.
struct Scaling {
  VectorXd D, E, F;
  double cost = 1.0;
};

inline Scaling ruiz_scaling(const QpProblem& p, int sweeps = 25) {
  const Eigen::Index n = p.num_vars(), me = p.num_eq(), mi = p.num_ineq();
  Scaling sc{VectorXd::Ones(n), VectorXd::Ones(me), VectorXd::Ones(mi), 1.0};
  auto inv_sqrt = [](double v) { return v > 0.0 ? 1.0 / std::sqrt(v) : 1.0; };
  for (int k = 0; k < sweeps; ++k) {
    const MatrixXd Qs = sc.D.asDiagonal() * p.Q * sc.D.asDiagonal();
    const MatrixXd As = sc.E.asDiagonal() * p.A * sc.D.asDiagonal();
    const MatrixXd Gs = sc.F.asDiagonal() * p.G * sc.D.asDiagonal();
    VectorXd col = n > 0 ? VectorXd(Qs.cwiseAbs().colwise().maxCoeff().transpose())
                         : VectorXd();
    if (me > 0) col = col.cwiseMax(As.cwiseAbs().colwise().maxCoeff().transpose());
    if (mi > 0) col = col.cwiseMax(Gs.cwiseAbs().colwise().maxCoeff().transpose());
    for (Eigen::Index j = 0; j < n; ++j) sc.D[j] *= inv_sqrt(col[j]);
    for (Eigen::Index i = 0; i < me; ++i) {
      sc.E[i] *= inv_sqrt(As.row(i).cwiseAbs().maxCoeff());
    }
    for (Eigen::Index i = 0; i < mi; ++i) {
      sc.F[i] *= inv_sqrt(Gs.row(i).cwiseAbs().maxCoeff());
    }
  }
  const MatrixXd Qs = sc.D.asDiagonal() * p.Q * sc.D.asDiagonal();
  const double q_size = inf_norm(VectorXd(sc.D.cwiseProduct(p.q)));
  const double Q_size = n > 0 ? Qs.cwiseAbs().colwise().maxCoeff().mean() : 0.0;
  const double size = std::max(Q_size, q_size);
  if (size > 0.0) sc.cost = std::clamp(1.0 / size, 1e-8, 1e8);
  return sc;
}

}  // namespace detail

inline QpSolution solve_qp(const QpProblem& prob, const QpTolerances& tol = {}) {
  prob.validate();
  if (!tol.equilibrate) return detail::solve_qp_core(prob, tol);

  const detail::Scaling sc = detail::ruiz_scaling(prob);
  QpProblem ps;
  ps.Q = sc.cost * (sc.D.asDiagonal() * prob.Q * sc.D.asDiagonal());
  ps.q = sc.cost * sc.D.cwiseProduct(prob.q);
  ps.A = sc.E.asDiagonal() * prob.A * sc.D.asDiagonal();
  ps.b = sc.E.cwiseProduct(prob.b);
  ps.G = sc.F.asDiagonal() * prob.G * sc.D.asDiagonal();
  ps.h = sc.F.cwiseProduct(prob.h);
  ps.Q = 0.5 * (ps.Q + ps.Q.transpose());

  QpSolution out = detail::solve_qp_core(ps, tol);
  out.x = sc.D.cwiseProduct(out.x);
  out.lambda_eq = sc.E.cwiseProduct(out.lambda_eq) / sc.cost;
  out.mu_ineq = sc.F.cwiseProduct(out.mu_ineq) / sc.cost;
  out.objective = prob.objective(out.x);
  if (out.status == QpStatus::Optimal && prob.num_ineq() > 0) {
    const VectorXd slack = (prob.h - prob.G * out.x).cwiseMax(0.0);
    detail::polish(prob, slack, tol, 1.0 + detail::inf_norm(prob.b), out);
  }
  return out;
}

// Inequality rows whose multiplier exceeds their slack at `sol`.
inline std::vector<Eigen::Index> active_set(const QpProblem& p,
                                            const QpSolution& sol) {
  std::vector<Eigen::Index> active;
  if (p.num_ineq() == 0) return active;
  const VectorXd slack = p.h - p.G * sol.x;
  for (Eigen::Index i = 0; i < p.num_ineq(); ++i) {
    if (sol.mu_ineq[i] > slack[i]) active.push_back(i);
  }
  return active;
}

// Solves a family of QPs that share Q, q, A and G but differ in b and h,
// assuming a fixed active set. One factorization serves every right-hand
// side; a result is returned only when it satisfies the KKT conditions of
// the full problem, so callers fall back to solve_qp otherwise.
class ActiveSetSolver {
 public:
  ActiveSetSolver(const QpProblem& p, std::vector<Eigen::Index> active,
                  const QpTolerances& tol = {})
      : p_(p), active_(std::move(active)), tol_(tol) {
    const Eigen::Index me = p.num_eq();
    const auto na = static_cast<Eigen::Index>(active_.size());
    MatrixXd C(me + na, p.num_vars());
    if (me > 0) C.topRows(me) = p.A;
    for (Eigen::Index k = 0; k < na; ++k) C.row(me + k) = p.G.row(active_[k]);
    kkt_.emplace(p.Q, C, tol.regularization);
  }

  std::optional<QpSolution> solve(const VectorXd& b, const VectorXd& h) const {
    const Eigen::Index n = p_.num_vars();
    const Eigen::Index me = p_.num_eq();
    const auto na = static_cast<Eigen::Index>(active_.size());
    VectorXd rhs(n + me + na);
    rhs.head(n) = -p_.q;
    if (me > 0) rhs.segment(n, me) = b;
    for (Eigen::Index k = 0; k < na; ++k) rhs[n + me + k] = h[active_[k]];
    const VectorXd sol = kkt_->solve(rhs);
    if (!sol.allFinite()) return std::nullopt;

    QpProblem probe = p_;
    probe.b = b;
    probe.h = h;
    QpSolution out;
    out.x = sol.head(n);
    out.lambda_eq = sol.segment(n, me);
    out.mu_ineq = VectorXd::Zero(p_.num_ineq());
    for (Eigen::Index k = 0; k < na; ++k) out.mu_ineq[active_[k]] = sol[n + me + k];

    const KktResiduals r = kkt_residuals(probe, out);
    const double scale_eq = 1.0 + detail::inf_norm(b);
    const double scale_ineq = 1.0 + detail::inf_norm(h);
    const double stat_scale =
        1.0 + std::max({detail::inf_norm(VectorXd(p_.Q * out.x)),
                        detail::inf_norm(p_.q),
                        detail::inf_norm(VectorXd(p_.G.transpose() * out.mu_ineq)),
                        me > 0 ? detail::inf_norm(VectorXd(p_.A.transpose() *
                                                           out.lambda_eq))
                               : 0.0});
    if (r.primal_eq > tol_.feas * scale_eq ||
        r.primal_ineq > tol_.feas * scale_ineq ||
        r.dual_sign > tol_.stat * stat_scale ||
        r.stationarity > tol_.stat * stat_scale) {
      return std::nullopt;
    }
    out.status = QpStatus::Optimal;
    out.objective = probe.objective(out.x);
    return out;
  }

 private:
  QpProblem p_;
  std::vector<Eigen::Index> active_;
  QpTolerances tol_;
  std::optional<detail::ReducedKkt> kkt_;
};

// Elementwise solve_qp. Elements are independent; results keep input order
// and do not depend on the thread schedule.
inline std::vector<QpSolution> solve_qp_batch(std::span<const QpProblem> problems,
                                              const QpTolerances& tol = {}) {
  std::vector<QpSolution> out(problems.size());
  parallel_for(problems.size(),
               [&](std::size_t i) { out[i] = solve_qp(problems[i], tol); });
  return out;
}

}  // namespace dpopf
