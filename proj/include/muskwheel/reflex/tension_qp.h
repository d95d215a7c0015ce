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

#ifndef MUSKWHEEL_REFLEX_TENSION_QP_H_
#define MUSKWHEEL_REFLEX_TENSION_QP_H_

#include <Eigen/Core>

namespace muskwheel {

// minimize    x^T W1 x + (G^T x + tau_nec)^T W2 (G^T x + tau_nec)
// subject to  x >= f_min
//
// W1 (n_muscles) and W2 (n_joints) are diagonal, stored as vectors.
struct RelaxProblem {
  Eigen::VectorXd tau_nec;  // N m, torque the muscles must supply is -G^T x
  Eigen::MatrixXd G;        // n_muscles x n_joints
  Eigen::VectorXd f_min;    // N
  Eigen::VectorXd w1;
  Eigen::VectorXd w2;

  void Validate() const;
  double Objective(const Eigen::VectorXd& x) const;
  Eigen::VectorXd Gradient(const Eigen::VectorXd& x) const;
  // Natural KKT residual max_i |min(x_i - f_min_i, grad_i)|.
  double KktResidual(const Eigen::VectorXd& x) const;
};

struct QpResult {
  Eigen::VectorXd x;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool used_fallback = false;
};

// Primal active-set solve of the box-constrained strictly convex QP, with a
// projected-gradient fallback if the active set cycles. Throws UsageError
// on dimension mismatch.
QpResult SolveNecessaryTension(const RelaxProblem& problem);

}  // namespace muskwheel

#endif  // MUSKWHEEL_REFLEX_TENSION_QP_H_
