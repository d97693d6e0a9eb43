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
#include "dpopf/qp.hpp"

#include <gtest/gtest.h>

#include <random>

#include "support/qp_oracle.hpp"

namespace dpopf {
namespace {

QpProblem scalar_problem(double Q, double q) {
  QpProblem p;
  p.Q = MatrixXd::Constant(1, 1, Q);
  p.q = VectorXd::Constant(1, q);
  p.A.resize(0, 1);
  p.b.resize(0);
  p.G.resize(0, 1);
  p.h.resize(0);
  return p;
}

void expect_kkt(const QpProblem& p, const QpSolution& s, double tol = 1e-7) {
  const KktResiduals r = kkt_residuals(p, s);
  EXPECT_LE(r.primal_eq, tol);
  EXPECT_LE(r.primal_ineq, tol);
  EXPECT_LE(r.dual_sign, tol);
  EXPECT_LE(r.stationarity, tol * (1.0 + p.q.cwiseAbs().maxCoeff()));
  EXPECT_LE(r.complementarity, tol);
}

TEST(SolveQp, UnconstrainedMinimumOfSquare) {
  const QpProblem p = scalar_problem(2.0, 0.0);
  const QpSolution s = solve_qp(p);
  ASSERT_EQ(s.status, QpStatus::Optimal);
  EXPECT_NEAR(s.x[0], 0.0, 1e-12);
  EXPECT_NEAR(s.objective, 0.0, 1e-12);
}

TEST(SolveQp, ActiveUpperBoundCarriesMultiplier) {
  // min (x-1)^2 s.t. x <= 0
  QpProblem p = scalar_problem(2.0, -2.0);
  p.G = MatrixXd::Constant(1, 1, 1.0);
  p.h = VectorXd::Zero(1);
  const QpSolution s = solve_qp(p);
  ASSERT_EQ(s.status, QpStatus::Optimal);
  EXPECT_NEAR(s.x[0], 0.0, 1e-8);
  EXPECT_NEAR(s.mu_ineq[0], 2.0, 1e-7);
  expect_kkt(p, s);
}

TEST(SolveQp, RandomBoxedProblemMatchesEnumerationOracle) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  QpProblem p = testing::random_feasible_qp(rng, 5, 2, 0);
  // Three box rows: x0 <= u0, -x2 <= l2, x4 <= u4 around a feasible point.
  const VectorXd x0 = p.A.completeOrthogonalDecomposition().solve(p.b);
  p.G = MatrixXd::Zero(3, 5);
  p.G(0, 0) = 1.0;
  p.G(1, 2) = -1.0;
  p.G(2, 4) = 1.0;
  p.h = p.G * x0 + VectorXd::Constant(3, 0.05);
  p.Q(0, 0) += 0.0;  // strictly PD already

  const auto oracle = testing::enumerate_active_sets(p);
  ASSERT_TRUE(oracle.has_value());
  const QpSolution s = solve_qp(p);
  ASSERT_EQ(s.status, QpStatus::Optimal);
  EXPECT_LE((s.x - oracle->x).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_NEAR(s.objective, oracle->objective, 1e-6);
  expect_kkt(p, s);
}

TEST(SolveQp, DetectsInconsistentInequalities) {
  // x <= -1 and -x <= -1
  QpProblem p = scalar_problem(2.0, 0.0);
  p.G.resize(2, 1);
  p.G << 1.0, -1.0;
  p.h = VectorXd::Constant(2, -1.0);
  EXPECT_EQ(solve_qp(p).status, QpStatus::Infeasible);
}

TEST(SolveQp, DetectsInconsistentEqualities) {
  QpProblem p = scalar_problem(2.0, 0.0);
  p.A.resize(2, 1);
  p.A << 1.0, 1.0;
  p.b.resize(2);
  p.b << 1.0, 2.0;
  p.G = MatrixXd::Constant(1, 1, 1.0);
  p.h = VectorXd::Constant(1, 10.0);
  EXPECT_EQ(solve_qp(p).status, QpStatus::Infeasible);
}

TEST(SolveQp, ReportsIterationCap) {
  std::mt19937_64 rng(3);
  const QpProblem p = testing::random_feasible_qp(rng, 6, 2, 8);
  QpTolerances tol;
  tol.max_iters = 1;
  EXPECT_EQ(solve_qp(p, tol).status, QpStatus::MaxIterations);
}

TEST(SolveQp, AcceptsSemidefiniteCost) {
  // Only x0 carries cost; x1 is pinned by an equality.
  QpProblem p;
  p.Q = MatrixXd::Zero(2, 2);
  p.Q(0, 0) = 2.0;
  p.q = VectorXd::Zero(2);
  p.A = MatrixXd::Zero(1, 2);
  p.A << 1.0, -1.0;
  p.b = VectorXd::Constant(1, 0.5);
  p.G = MatrixXd::Zero(2, 2);
  p.G(0, 1) = 1.0;
  p.G(1, 1) = -1.0;
  p.h = VectorXd::Constant(2, 10.0);
  const QpSolution s = solve_qp(p);
  ASSERT_EQ(s.status, QpStatus::Optimal);
  EXPECT_NEAR(s.x[0], 0.0, 1e-7);
  EXPECT_NEAR(s.x[1], -0.5, 1e-7);
}

TEST(SolveQp, RejectsMalformedProblems) {
  QpProblem p = scalar_problem(2.0, 0.0);
  p.G.resize(1, 2);
  p.h.resize(1);
  EXPECT_THROW(solve_qp(p), std::invalid_argument);

  QpProblem asym;
  asym.Q = MatrixXd::Identity(2, 2);
  asym.Q(0, 1) = 1.0;
  asym.q = VectorXd::Zero(2);
  asym.A.resize(0, 2);
  asym.G.resize(0, 2);
  EXPECT_THROW(solve_qp(asym), std::invalid_argument);
}

TEST(SolveQp, JointCostScalingLeavesArgminUnchanged) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    QpProblem p = testing::random_feasible_qp(rng, 6, 2, 6);
    const QpSolution base = solve_qp(p);
    ASSERT_EQ(base.status, QpStatus::Optimal);
    for (double c : {0.01, 7.5, 300.0}) {
      QpProblem scaled = p;
      scaled.Q *= c;
      scaled.q *= c;
      const QpSolution s = solve_qp(scaled);
      ASSERT_EQ(s.status, QpStatus::Optimal);
      EXPECT_LE((s.x - base.x).cwiseAbs().maxCoeff(), 1e-8)
          << "trial " << trial << " scale " << c;
    }
  }
}

TEST(SolveQp, KktBoundsHoldOnRandomProblems) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> dim(1, 8);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = dim(rng);
    const int me = std::uniform_int_distribution<int>(0, std::min(n - 1, 4))(rng);
    const int mi = std::uniform_int_distribution<int>(0, 10)(rng);
    const QpProblem p = testing::random_feasible_qp(rng, n, me, mi);
    const QpSolution s = solve_qp(p);
    ASSERT_EQ(s.status, QpStatus::Optimal) << "trial " << trial;
    expect_kkt(p, s);
    const auto oracle = testing::enumerate_active_sets(p);
    ASSERT_TRUE(oracle.has_value());
    EXPECT_NEAR(s.objective, oracle->objective,
                1e-6 * (1.0 + std::abs(oracle->objective)));
  }
}

// A zone-sized problem with a 1e6 angle penalty and a pinned reference
// angle: min 100 p^2 + 2000 p + 5e5 t^2 + c t with p = -10 t, 0 <= p <= 2.
TEST(SolveQp, PinnedAngleWithLargePenalty) {
  const double c = 116664.83955704502;
  QpProblem p;
  p.Q = VectorXd((VectorXd(3) << 200.0, 1e6, 1e6).finished()).asDiagonal();
  p.q = VectorXd(3);
  p.q << 2000.0, -6.3052857815714732e-07, c;
  p.A = MatrixXd(2, 3);
  p.A << -1, 10, -10,
          0, 1, 0;
  p.b = VectorXd::Zero(2);
  p.G = MatrixXd(4, 3);
  p.G << 1, 0, 0,
        -1, 0, 0,
         0, 10, -10,
         0, -10, 10;
  p.h = VectorXd(4);
  p.h << 2, 0, 1000, 1000;
  const QpSolution s = solve_qp(p);
  ASSERT_EQ(s.status, QpStatus::Optimal);
  const double p_star = (c / 10.0 - 2000.0) / (2.0 * (100.0 + 5e5 / 100.0));
  EXPECT_NEAR(s.x[0], p_star, 1e-8);
  EXPECT_NEAR(s.x[2], -p_star / 10.0, 1e-9);
}

// Substituting x = D y with D spanning five decades must not change the
// answer.
TEST(SolveQp, BadlyScaledVariablesMatchOracle) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> decade(-2.5, 2.5);
  for (int trial = 0; trial < 40; ++trial) {
    const QpProblem p = testing::random_feasible_qp(rng, 6, 2, 8);
    const auto oracle = testing::enumerate_active_sets(p);
    ASSERT_TRUE(oracle.has_value());
    VectorXd d(6);
    for (Eigen::Index j = 0; j < 6; ++j) d[j] = std::pow(10.0, decade(rng));
    QpProblem ps;
    ps.Q = d.asDiagonal() * p.Q * d.asDiagonal();
    ps.Q = 0.5 * (ps.Q + ps.Q.transpose()).eval();
    ps.q = d.cwiseProduct(p.q);
    ps.A = p.A * d.asDiagonal();
    ps.b = p.b;
    ps.G = p.G * d.asDiagonal();
    ps.h = p.h;
    const QpSolution s = solve_qp(ps);
    ASSERT_EQ(s.status, QpStatus::Optimal) << "trial " << trial;
    EXPECT_LE((d.cwiseProduct(s.x) - oracle->x).cwiseAbs().maxCoeff(), 1e-6) << "trial " << trial;
    EXPECT_NEAR(s.objective, oracle->objective, 1e-6 * (1.0 + std::abs(oracle->objective)));
  }
}

TEST(SolveQp, EquilibrationCanBeSwitchedOff) {
  std::mt19937_64 rng(8);
  const QpProblem p = testing::random_feasible_qp(rng, 5, 1, 6);
  QpTolerances raw;
  raw.equilibrate = false;
  const QpSolution a = solve_qp(p);
  const QpSolution b = solve_qp(p, raw);
  ASSERT_EQ(a.status, QpStatus::Optimal);
  ASSERT_EQ(b.status, QpStatus::Optimal);
  EXPECT_LE((a.x - b.x).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(SolveQpBatch, PreservesOrderAndMatchesSequential) {
  std::mt19937_64 rng(9);
  std::vector<QpProblem> batch;
  for (int i = 0; i < 6; ++i) batch.push_back(testing::random_feasible_qp(rng, 4, 1, 5));
  batch.push_back(batch.front());
  const auto results = solve_qp_batch(batch);
  ASSERT_EQ(results.size(), batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const QpSolution seq = solve_qp(batch[i]);
    EXPECT_EQ(results[i].status, seq.status);
    EXPECT_EQ(results[i].x, seq.x);
  }
  EXPECT_EQ(results.front().x, results.back().x);
}

TEST(SolveQpBatch, EmptyBatch) {
  EXPECT_TRUE(solve_qp_batch(std::span<const QpProblem>{}).empty());
}

}  // namespace
}  // namespace dpopf
