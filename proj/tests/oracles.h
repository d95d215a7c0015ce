// Copyright 2026 The Muskwheel Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MUSKWHEEL_TESTS_ORACLES_H_
#define MUSKWHEEL_TESTS_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "muskwheel/reflex/tension_qp.h"

namespace muskwheel::testing {

// ----- tension QP ----- //

// Hessian and linear term of the QP written as 1/2 x^T H x + c^T x.
inline void QpQuadratic(const RelaxProblem& p, Eigen::MatrixXd* h,
                        Eigen::VectorXd* c) {
  *h = 2.0 * Eigen::MatrixXd(p.w1.asDiagonal()) +
       2.0 * p.G * p.w2.asDiagonal() * p.G.transpose();
  *c = 2.0 * p.G * p.w2.asDiagonal() * p.tau_nec;
}

// Accelerated projected gradient with adaptive restart, run until the
// iterate stops moving.
inline Eigen::VectorXd ProjectedGradientOracle(const RelaxProblem& p,
                                               int max_iterations = 2000000) {
  Eigen::MatrixXd h;
  Eigen::VectorXd c;
  QpQuadratic(p, &h, &c);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  const double step = 1.0 / es.eigenvalues().maxCoeff();
  auto grad = [&](const Eigen::VectorXd& x) { return (h * x + c).eval(); };
  auto project = [&](const Eigen::VectorXd& x) {
    return x.cwiseMax(p.f_min).eval();
  };
  Eigen::VectorXd x = p.f_min, y = x;
  double t = 1.0;
  for (int it = 0; it < max_iterations; ++it) {
    const Eigen::VectorXd next = project(y - step * grad(y));
    // restart momentum when it points uphill
    if ((y - next).dot(next - x) > 0) {
      t = 1.0;
      y = x;
      continue;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = next + ((t - 1.0) / t_next) * (next - x);
    const double moved = (next - x).cwiseAbs().maxCoeff();
    x = next;
    t = t_next;
    if (moved < 1e-13 && it > 100) break;
  }
  // plain projected steps to settle the active set
  for (int it = 0; it < 1000; ++it) x = project(x - step * grad(x));
  return x;
}

// Exact minimizer by enumerating every active set (m <= 12).
inline Eigen::VectorXd ActiveSetEnumerationOracle(const RelaxProblem& p) {
  Eigen::MatrixXd h;
  Eigen::VectorXd c;
  QpQuadratic(p, &h, &c);
  const int m = static_cast<int>(p.f_min.size());
  Eigen::VectorXd best;
  double best_obj = INFINITY;
  for (int mask = 0; mask < (1 << m); ++mask) {
    Eigen::VectorXd x = p.f_min;
    std::vector<int> free;
    for (int i = 0; i < m; ++i) {
      if (!(mask & (1 << i))) free.push_back(i);
    }
    if (!free.empty()) {
      const int nf = static_cast<int>(free.size());
      Eigen::MatrixXd hff(nf, nf);
      Eigen::VectorXd rhs(nf);
      for (int a = 0; a < nf; ++a) {
        rhs[a] = -c[free[a]];
        for (int j = 0; j < m; ++j) {
          if (mask & (1 << j)) rhs[a] -= h(free[a], j) * p.f_min[j];
        }
        for (int b = 0; b < nf; ++b) hff(a, b) = h(free[a], free[b]);
      }
      const Eigen::VectorXd xf = hff.llt().solve(rhs);
      for (int a = 0; a < nf; ++a) x[free[a]] = xf[a];
    }
    if ((x - p.f_min).minCoeff() < -1e-12) continue;
    const double obj = 0.5 * x.dot(h * x) + c.dot(x);
    if (obj < best_obj) {
      best_obj = obj;
      best = x;
    }
  }
  return best;
}

// Random instance with up to `max_joints` joints and `max_muscles` muscles.
inline RelaxProblem RandomQp(std::mt19937_64& rng, int max_joints,
                             int max_muscles) {
  std::uniform_int_distribution<int> joints(1, max_joints);
  const int nj = joints(rng);
  std::uniform_int_distribution<int> muscles(nj + 1, max_muscles);
  const int m = muscles(rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RelaxProblem p;
  p.G = Eigen::MatrixXd::Zero(m, nj);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < nj; ++j) {
      if (u(rng) < 0.6) {
        p.G(i, j) = (u(rng) < 0.5 ? -1 : 1) * (0.01 + 0.04 * u(rng));
      }
    }
  }
  p.tau_nec = Eigen::VectorXd::NullaryExpr(nj, [&] { return 4 * u(rng) - 2; });
  p.f_min = Eigen::VectorXd::NullaryExpr(m, [&] { return 10 * u(rng); });
  p.w1 = Eigen::VectorXd::NullaryExpr(m, [&] { return 0.5 + 1.5 * u(rng); });
  p.w2 = Eigen::VectorXd::NullaryExpr(
      nj, [&] { return std::pow(10.0, 2.0 + 4.0 * u(rng)); });
  return p;
}

}  // namespace muskwheel::testing

#endif  // MUSKWHEEL_TESTS_ORACLES_H_
