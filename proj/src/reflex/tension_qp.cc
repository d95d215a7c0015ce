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

#include "muskwheel/reflex/tension_qp.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "muskwheel/core/errors.h"

namespace muskwheel {

void RelaxProblem::Validate() const {
  const int m = G.rows(), n = G.cols();
  if (m == 0 || n == 0) throw UsageError("empty muscle Jacobian");
  if (tau_nec.size() != n || w2.size() != n) {
    throw UsageError("tau_nec/W2 size must equal the number of joints");
  }
  if (f_min.size() != m || w1.size() != m) {
    throw UsageError("f_min/W1 size must equal the number of muscles");
  }
  if ((w1.array() <= 0).any() || (w2.array() <= 0).any()) {
    throw UsageError("W1 and W2 must have positive diagonals");
  }
  if ((f_min.array() < 0).any()) throw UsageError("f_min must be >= 0");
}

double RelaxProblem::Objective(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd r = G.transpose() * x + tau_nec;
  return x.dot(w1.cwiseProduct(x)) + r.dot(w2.cwiseProduct(r));
}

Eigen::VectorXd RelaxProblem::Gradient(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd r = G.transpose() * x + tau_nec;
  return 2.0 * w1.cwiseProduct(x) + 2.0 * G * w2.cwiseProduct(r);
}

double RelaxProblem::KktResidual(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd g = Gradient(x);
  double worst = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    worst = std::max(worst, std::abs(std::min(x[i] - f_min[i], g[i])));
  }
  return worst;
}

namespace {

// FISTA on the shifted problem min 1/2 y^T H y + q^T y, y >= 0.
Eigen::VectorXd ProjectedGradient(const Eigen::MatrixXd& h,
                                  const Eigen::VectorXd& q,
                                  Eigen::VectorXd y, int max_iter) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
  const double step = 1.0 / eig.eigenvalues().maxCoeff();
  Eigen::VectorXd z = y, prev = y;
  double t = 1.0;
  for (int it = 0; it < max_iter; ++it) {
    prev = y;
    y = (z - step * (h * z + q)).cwiseMax(0.0);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    z = y + ((t - 1.0) / t_next) * (y - prev);
    t = t_next;
    if ((y - prev).lpNorm<Eigen::Infinity>() < 1e-15 * (1.0 + y.lpNorm<Eigen::Infinity>())) {
      break;
    }
  }
  return y;
}

}  // namespace

QpResult SolveNecessaryTension(const RelaxProblem& problem) {
  problem.Validate();
  const int m = problem.G.rows();
  const Eigen::MatrixXd h =
      2.0 * (Eigen::MatrixXd(problem.w1.asDiagonal()) +
             problem.G * problem.w2.asDiagonal() * problem.G.transpose());
  const Eigen::VectorXd c =
      2.0 * problem.G * problem.w2.cwiseProduct(problem.tau_nec);
  const Eigen::VectorXd q = h * problem.f_min + c;
  const double scale = 1.0 + h.diagonal().maxCoeff() *
                                 (1.0 + problem.f_min.lpNorm<Eigen::Infinity>()) +
                             q.lpNorm<Eigen::Infinity>();
  const double tol = 1e-13 * scale;

  // y = x - f_min; start at the vertex with every bound active
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  std::vector<bool> active(m, true);
  QpResult result;
  const int max_iter = 20 * m + 20;
  bool converged = false;
  int it = 0;
  for (; it < max_iter; ++it) {
    std::vector<int> free;
    for (int i = 0; i < m; ++i) {
      if (!active[i]) free.push_back(i);
    }
    // minimizer on the current face
    Eigen::VectorXd target = Eigen::VectorXd::Zero(m);
    if (!free.empty()) {
      const int nf = free.size();
      Eigen::MatrixXd hff(nf, nf);
      Eigen::VectorXd qf(nf);
      for (int a = 0; a < nf; ++a) {
        qf[a] = q[free[a]];
        for (int b = 0; b < nf; ++b) hff(a, b) = h(free[a], free[b]);
      }
      Eigen::VectorXd yf = hff.llt().solve(-qf);
      for (int a = 0; a < nf; ++a) target[free[a]] = yf[a];
    }
    // ratio test toward the face minimizer
    double alpha = 1.0;
    int blocking = -1;
    for (int i : free) {
      if (target[i] < 0.0) {
        const double ratio = y[i] / (y[i] - target[i]);
        if (ratio < alpha) {
          alpha = ratio;
          blocking = i;
        }
      }
    }
    if (blocking >= 0) {
      y += alpha * (target - y);
      y[blocking] = 0.0;
      active[blocking] = true;
      for (int i = 0; i < m; ++i) {
        if (active[i]) y[i] = 0.0;
      }
      continue;
    }
    y = target;
    // multipliers of the active bounds
    const Eigen::VectorXd grad = h * y + q;
    int release = -1;
    double most_negative = -tol;
    for (int i = 0; i < m; ++i) {
      if (active[i] && grad[i] < most_negative) {
        most_negative = grad[i];
        release = i;
      }
    }
    if (release < 0) {
      converged = true;
      break;
    }
    active[release] = false;
  }
  if (!converged) {
    y = ProjectedGradient(h, q, y.cwiseMax(0.0), 200000);
    result.used_fallback = true;
  }
  result.x = y + problem.f_min;
  result.kkt_residual = problem.KktResidual(result.x);
  result.iterations = it;
  return result;
}

}  // namespace muskwheel
