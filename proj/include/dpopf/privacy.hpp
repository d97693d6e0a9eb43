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

// Laplace mechanism on released boundary angles: sensitivity of a zone's
// sub-problem to its loads, static and per-iteration noise plans, and an
// empirical check of the privacy loss.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dpopf/admm.hpp"
#include "dpopf/case_model.hpp"
#include "dpopf/qp.hpp"
#include "dpopf/zones.hpp"

namespace dpopf {

enum class SensitivityMode { GlobalBound, LocalPerIteration, LocalMaxOverRun };

inline const char* to_string(SensitivityMode m) {
  switch (m) {
    case SensitivityMode::GlobalBound:
      return "global";
    case SensitivityMode::LocalPerIteration:
      return "local";
    case SensitivityMode::LocalMaxOverRun:
      return "local-max";
  }
  return "?";
}

struct PrivacyParams {
  double epsilon = 1.0;
  // Adjacency: a fraction of the protected load, or an absolute p.u. amount
  // when absolute_alpha is set.
  double alpha_frac = 0.0;
  bool absolute_alpha = false;
  int attack_budget = 1;
  bool scale_composition = false;
  SensitivityMode mode = SensitivityMode::LocalPerIteration;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    if (!(alpha_frac >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
    if (!absolute_alpha && alpha_frac > 1.0) {
      throw std::invalid_argument("relative alpha must be <= 1");
    }
    if (attack_budget < 1) throw std::invalid_argument("budget must be >= 1");
  }

  double alpha_for(double load) const {
    return absolute_alpha ? alpha_frac : alpha_frac * load;
  }
};

struct SensitivityReport {
  ZoneId zone_id = 0;
  int iter = 0;
  double value = 0.0;  // rad, L1 over M_z
  BusId argmax_bus = 0;
  int argmax_sign = 0;
  SensitivityMode mode = SensitivityMode::LocalPerIteration;
};

// Independent generator for one (zone, iteration, purpose) triple of a
// master seed, so draws do not depend on evaluation order.
enum class StreamPurpose : std::uint32_t { StaticPlan = 1, DynamicNoise = 2, Check = 3 };

inline std::mt19937_64 make_stream(std::uint64_t seed, ZoneId zone, int iter,
                                   StreamPurpose purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(zone),
                    static_cast<std::uint32_t>(iter),
                    static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

// Zero-mean Laplace with scale b by inverting the CDF, so draws from the
// same stream are exactly proportional to b.
inline VectorXd sample_laplace(double b, Eigen::Index n, std::mt19937_64& rng) {
  if (!(b >= 0.0)) throw std::invalid_argument("Laplace scale must be >= 0");
  VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double u;
    do {
      u = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
    } while (u == -0.5);
    out[i] = -b * std::copysign(1.0, u) * std::log1p(-2.0 * std::abs(u));
  }
  return out;
}

// The slack angle is pinned to zero in every zone that holds it, so its
// release carries no load information and needs no noise. Noise there would
// also leave a disagreement the consensus can never remove.
inline void clear_pinned(const ZoneView& zone, VectorXd& xi) {
  if (auto m = zone.boundary_pos(zone.slack_bus)) xi[static_cast<Eigen::Index>(*m)] = 0.0;
}

// Largest load in the whole system, in p.u.
inline SensitivityReport global_sensitivity_bound(const NetworkCase& c,
                                                  const ZoneView& zone) {
  SensitivityReport r;
  r.zone_id = zone.zone_id;
  r.mode = SensitivityMode::GlobalBound;
  for (std::size_t i = 0; i < c.num_buses(); ++i) {
    if (c.loads[i] > r.value) {
      r.value = c.loads[i];
      r.argmax_bus = c.buses[i];
      r.argmax_sign = 1;
    }
  }
  return r;
}

namespace detail {

inline VectorXd boundary_angles(const ZoneSubproblem& sp, const VectorXd& x) {
  VectorXd out(static_cast<Eigen::Index>(sp.boundary_vars.size()));
  for (std::size_t m = 0; m < sp.boundary_vars.size(); ++m) {
    out[static_cast<Eigen::Index>(m)] = x[sp.boundary_vars[m]];
  }
  return out;
}

}  // namespace detail

// Boundary angles the zone would release at (consensus, dual) for each of
// the given load vectors. Loads are aligned with zone.domestic. Entries for
// infeasible load vectors are left empty.
class ZoneQuery {
 public:
  ZoneQuery(const ZoneView& zone, const VectorXd& consensus, const VectorXd& dual,
            double rho, const QpTolerances& tol = {})
      : sp_(assemble_subproblem(zone, consensus, dual, rho)), tol_(tol) {}

  const ZoneSubproblem& subproblem() const { return sp_; }

  std::optional<VectorXd> operator()(const std::vector<double>& loads) {
    VectorXd b = sp_.qp.b;
    for (std::size_t r = 0; r < loads.size(); ++r) {
      b[ZoneSubproblem::balance_row(r)] = -loads[r];
    }
    if (fast_) {
      if (auto s = fast_->solve(b, sp_.qp.h)) return detail::boundary_angles(sp_, s->x);
    }
    QpProblem p = sp_.qp;
    p.b = b;
    const QpSolution s = solve_qp(p, tol_);
    if (s.status != QpStatus::Optimal) return std::nullopt;
    if (!fast_) fast_.emplace(sp_.qp, active_set(p, s), tol_);
    return detail::boundary_angles(sp_, s.x);
  }

 private:
  ZoneSubproblem sp_;
  QpTolerances tol_;
  std::optional<ActiveSetSolver> fast_;
};

// Max over single-load changes d_i -> d_i + s * alpha_i (s = +-1, i in R_z)
// of the L1 change in released boundary angles. Loads are clamped at zero;
// a candidate that makes the zone infeasible is moved toward d_i by
// bisection to the edge of the feasible range.
inline SensitivityReport local_sensitivity(const ZoneView& zone,
                                           const VectorXd& consensus,
                                           const VectorXd& dual, double rho,
                                           const PrivacyParams& params,
                                           const QpTolerances& tol = {}) {
  SensitivityReport rep;
  rep.zone_id = zone.zone_id;
  rep.mode = SensitivityMode::LocalPerIteration;
  ZoneQuery query(zone, consensus, dual, rho, tol);
  const std::vector<double>& base = zone.local_loads;
  const auto at_base = query(base);
  if (!at_base) {
    throw SolverError(QpStatus::Infeasible,
                      "zone " + std::to_string(zone.zone_id) +
                          " sub-problem at the unperturbed loads");
  }

  std::vector<double> loads = base;
  for (std::size_t i = 0; i < base.size(); ++i) {
    const double alpha = params.alpha_for(base[i]);
    if (!(alpha > 0.0)) continue;
    for (int sign : {1, -1}) {
      const double target = std::max(0.0, base[i] + sign * alpha);
      if (target == base[i]) continue;
      loads[i] = target;
      auto moved = query(loads);
      if (!moved) {
        double lo = 0.0, hi = 1.0;  // fraction of the step that stays feasible
        for (int k = 0; k < 40; ++k) {
          const double mid = 0.5 * (lo + hi);
          loads[i] = base[i] + mid * (target - base[i]);
          if (query(loads)) lo = mid; else hi = mid;
        }
        loads[i] = base[i] + lo * (target - base[i]);
        moved = lo > 0.0 ? query(loads) : std::nullopt;
      }
      loads[i] = base[i];
      if (!moved) continue;
      const double change = (*moved - *at_base).lpNorm<1>();
      if (change > rep.value) {
        rep.value = change;
        rep.argmax_bus = zone.domestic[i];
        rep.argmax_sign = sign;
      }
    }
  }
  return rep;
}

// Laplace scale for one iteration: T * delta / epsilon under composition
// scaling, delta / epsilon otherwise.
inline double make_dynamic_scale(double delta, const PrivacyParams& params) {
  if (!(delta >= 0.0)) throw std::invalid_argument("sensitivity must be >= 0");
  const double t = params.scale_composition ? params.attack_budget : 1.0;
  return t * delta / params.epsilon;
}

// One draw per zone before the first iteration, scale bound_z / epsilon.
// `bounds` is aligned with `zones`.
inline NoisePlan make_static_plan(const std::vector<ZoneView>& zones,
                                  const std::vector<double>& bounds,
                                  const PrivacyParams& params) {
  params.validate();
  if (bounds.size() != zones.size()) {
    throw std::invalid_argument("one sensitivity bound per zone is required");
  }
  NoisePlan plan;
  plan.kind = NoisePlan::Kind::Static;
  for (std::size_t z = 0; z < zones.size(); ++z) {
    const double scale = bounds[z] / params.epsilon;
    auto rng = make_stream(params.seed, zones[z].zone_id, 0, StreamPurpose::StaticPlan);
    VectorXd xi =
        sample_laplace(scale, static_cast<Eigen::Index>(zones[z].boundary.size()), rng);
    clear_pinned(zones[z], xi);
    plan.static_noise.push_back(std::move(xi));
    plan.static_scale.push_back(scale);
  }
  return plan;
}

// Global bound for every zone.
inline std::vector<double> global_bounds(const NetworkCase& c,
                                         const std::vector<ZoneView>& zones) {
  std::vector<double> out;
  for (const ZoneView& z : zones) out.push_back(global_sensitivity_bound(c, z).value);
  return out;
}

// Per-iteration noise calibrated to the local sensitivity at the inputs the
// zone receives on that iteration.
inline NoisePlan make_dynamic_plan(const PrivacyParams& params,
                                   const QpTolerances& tol = {}) {
  params.validate();
  NoisePlan plan;
  plan.kind = NoisePlan::Kind::Dynamic;
  plan.dynamic = [params, tol](const NoiseRequest& req) {
    const SensitivityReport rep = local_sensitivity(
        *req.zone, *req.consensus, *req.dual, req.rho, params, tol);
    NoiseSample out;
    out.sensitivity = rep.value;
    out.argmax_bus = rep.argmax_bus;
    out.argmax_sign = rep.argmax_sign;
    out.scale = make_dynamic_scale(rep.value, params);
    auto rng = make_stream(params.seed, req.zone->zone_id, req.iter,
                           StreamPurpose::DynamicNoise);
    out.xi = sample_laplace(out.scale, static_cast<Eigen::Index>(req.zone->boundary.size()), rng);
    clear_pinned(*req.zone, out.xi);
    return out;
  };
  return plan;
}

// Per-zone maximum of the local sensitivity recorded over a dynamic run.
inline std::vector<double> max_local_sensitivity(const AdmmResult& run) {
  std::vector<double> out(run.zones.size(), 0.0);
  for (const IterationRecord& rec : run.trace) {
    for (std::size_t z = 0; z < rec.noise.size(); ++z) {
      if (!std::isnan(rec.noise[z].sensitivity)) {
        out[z] = std::max(out[z], rec.noise[z].sensitivity);
      }
    }
  }
  return out;
}

// CSV rows iter, zone, delta, argmax_bus, sign for every dynamic draw.
inline void write_sensitivity_csv(std::ostream& out, const AdmmResult& run) {
  out << "iter,zone,delta,argmax_bus,sign\n";
  out.precision(17);
  for (const IterationRecord& rec : run.trace) {
    for (std::size_t z = 0; z < rec.noise.size(); ++z) {
      const NoiseSample& n = rec.noise[z];
      if (std::isnan(n.sensitivity)) continue;
      out << rec.iter << "," << run.zones[z].zone_id << "," << n.sensitivity << ","
          << n.argmax_bus << "," << n.argmax_sign << "\n";
    }
  }
}

struct DpCheckResult {
  double max_log_ratio = 0.0;
  bool degenerate = false;
};

// Releases query(D) + Lap(scale) and query(D') + Lap(scale) `trials` times
// each, bins every coordinate on bins of equal pooled mass, and returns the
// largest |log(freq_D / freq_D')| over bins where both counts are positive.
// A coordinate whose samples all land in one bin marks the check degenerate.
inline DpCheckResult empirical_dp_check(const VectorXd& query_d,
                                        const VectorXd& query_d_adjacent,
                                        double scale, int trials, int bins,
                                        std::uint64_t seed) {
  if (query_d.size() != query_d_adjacent.size()) {
    throw std::invalid_argument("query outputs differ in length");
  }
  if (trials < 1 || bins < 2) throw std::invalid_argument("need trials >= 1, bins >= 2");
  DpCheckResult res;
  auto rng_a = make_stream(seed, 0, 0, StreamPurpose::Check);
  auto rng_b = make_stream(seed, 1, 0, StreamPurpose::Check);
  const Eigen::Index dim = query_d.size();
  std::vector<VectorXd> a, b;
  a.reserve(static_cast<std::size_t>(trials));
  b.reserve(static_cast<std::size_t>(trials));
  for (int t = 0; t < trials; ++t) {
    a.push_back(query_d + sample_laplace(scale, dim, rng_a));
    b.push_back(query_d_adjacent + sample_laplace(scale, dim, rng_b));
  }
  for (Eigen::Index k = 0; k < dim; ++k) {
    std::vector<double> pooled;
    pooled.reserve(2 * a.size());
    for (const VectorXd& v : a) pooled.push_back(v[k]);
    for (const VectorXd& v : b) pooled.push_back(v[k]);
    std::sort(pooled.begin(), pooled.end());
    std::vector<double> edges;  // interior edges
    for (int j = 1; j < bins; ++j) {
      edges.push_back(pooled[pooled.size() * static_cast<std::size_t>(j) /
                             static_cast<std::size_t>(bins)]);
    }
    auto bin_of = [&](double x) {
      return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), x) -
                                      edges.begin());
    };
    std::vector<double> ca(static_cast<std::size_t>(bins), 0.0);
    std::vector<double> cb(static_cast<std::size_t>(bins), 0.0);
    for (const VectorXd& v : a) ca[bin_of(v[k])] += 1.0;
    for (const VectorXd& v : b) cb[bin_of(v[k])] += 1.0;
    int occupied = 0;
    for (int j = 0; j < bins; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      if (ca[ju] + cb[ju] > 0) ++occupied;
      if (ca[ju] > 0 && cb[ju] > 0) {
        res.max_log_ratio = std::max(res.max_log_ratio, std::abs(std::log(ca[ju] / cb[ju])));
      }
    }
    if (occupied < 2) res.degenerate = true;
  }
  return res;
}

// Same check for a deterministic query evaluated on two load vectors.
inline DpCheckResult empirical_dp_check(
    const std::function<VectorXd(const std::vector<double>&)>& query,
    const std::vector<double>& d, const std::vector<double>& d_adjacent,
    double scale, int trials, int bins, std::uint64_t seed) {
  return empirical_dp_check(query(d), query(d_adjacent), scale, trials, bins, seed);
}

}  // namespace dpopf
