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

#include "muskwheel/plant/arm_plant.h"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "muskwheel/core/errors.h"

namespace muskwheel {

namespace {

// absolute link angles alpha_k = sum_{j <= k} theta_j
Eigen::VectorXd AbsoluteAngles(const Eigen::VectorXd& theta) {
  Eigen::VectorXd alpha(theta.size());
  double acc = 0.0;
  for (int k = 0; k < theta.size(); ++k) {
    acc += theta[k];
    alpha[k] = acc;
  }
  return alpha;
}

// Gravity potential gradient and Hessian of the arm, dU/dtheta.
void GravityDerivatives(const ArmPlant& plant, const Eigen::VectorXd& theta,
                        double extra_hand_mass, Eigen::VectorXd* gradient,
                        Eigen::MatrixXd* hessian) {
  const int n = plant.n_joints;
  Eigen::VectorXd alpha = AbsoluteAngles(theta);
  // weight lever of link k: the height of every mass depends on
  // c_k sin(alpha_k); accumulate the total coefficient per link.
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(n);
  const double tip_mass = plant.payload_mass + extra_hand_mass;
  for (int b = 0; b < n; ++b) {
    for (int k = 0; k < b; ++k) coef[k] += plant.link_masses[b] * plant.link_lengths[k];
    coef[b] += plant.link_masses[b] * 0.5 * plant.link_lengths[b];
  }
  for (int k = 0; k < n; ++k) coef[k] += tip_mass * plant.link_lengths[k];
  coef *= plant.gravity;

  if (gradient) {
    gradient->setZero(n);
    for (int k = 0; k < n; ++k) {
      const double c = coef[k] * std::cos(alpha[k]);
      for (int i = 0; i <= k; ++i) (*gradient)[i] += c;
    }
  }
  if (hessian) {
    hessian->setZero(n, n);
    for (int k = 0; k < n; ++k) {
      const double s = -coef[k] * std::sin(alpha[k]);
      for (int i = 0; i <= k; ++i) {
        for (int j = 0; j <= k; ++j) (*hessian)(i, j) += s;
      }
    }
  }
}

double ElasticEnergy(const ArmPlant& plant, const Eigen::VectorXd& stretch) {
  double e = 0.0;
  for (int i = 0; i < plant.n_muscles; ++i) {
    const double d = std::max(0.0, stretch[i]);
    e += plant.elastic_k[i] * d * d * d / 3.0;
  }
  return e;
}

double GravityEnergy(const ArmPlant& plant, const Eigen::VectorXd& theta,
                     double extra_hand_mass) {
  Eigen::VectorXd alpha = AbsoluteAngles(theta);
  double y = 0.0, u = 0.0;
  for (int k = 0; k < plant.n_joints; ++k) {
    const double half = 0.5 * plant.link_lengths[k] * std::sin(alpha[k]);
    u += plant.link_masses[k] * (y + half);
    y += plant.link_lengths[k] * std::sin(alpha[k]);
  }
  u += (plant.payload_mass + extra_hand_mass) * y;
  return plant.gravity * u;
}

void CheckSize(const Eigen::VectorXd& v, int n, const char* what) {
  if (v.size() != n) {
    throw UsageError(std::string(what) + " has size " +
                     std::to_string(v.size()) + ", expected " +
                     std::to_string(n));
  }
}

}  // namespace

ArmPlant ArmPlant::Default() {
  ArmPlant p;
  p.n_joints = 2;
  p.n_muscles = 4;
  const double r = 0.02;
  p.moment_arms.resize(4, 2);
  p.moment_arms << -r, 0.0,  //
      r, 0.0,                //
      0.0, -r,               //
      0.0, r;
  p.moment_arm_slopes = Eigen::MatrixXd::Zero(4, 2);
  p.elastic_k = Eigen::VectorXd::Constant(4, 1.0e6);
  p.rest_lengths = Eigen::VectorXd::Constant(4, 0.30);
  p.link_lengths = Eigen::Vector2d(0.15, 0.12);
  p.link_masses = Eigen::Vector2d(0.10, 0.08);
  p.damping = Eigen::Vector2d(0.01, 0.005);
  p.joint_lower = Eigen::Vector2d::Constant(-1.3);
  p.joint_upper = Eigen::Vector2d::Constant(1.3);
  return p;
}

void ArmPlant::Validate() const {
  if (n_joints < 1 || n_muscles < 1) throw UsageError("empty plant");
  auto mat = [&](const Eigen::MatrixXd& m, const char* name) {
    if (m.rows() != n_muscles || m.cols() != n_joints) {
      throw UsageError(std::string(name) + " must be n_muscles x n_joints");
    }
  };
  mat(moment_arms, "moment_arms");
  mat(moment_arm_slopes, "moment_arm_slopes");
  CheckSize(elastic_k, n_muscles, "elastic_k");
  CheckSize(rest_lengths, n_muscles, "rest_lengths");
  CheckSize(link_lengths, n_joints, "link_lengths");
  CheckSize(link_masses, n_joints, "link_masses");
  CheckSize(damping, n_joints, "damping");
  CheckSize(joint_lower, n_joints, "joint_lower");
  CheckSize(joint_upper, n_joints, "joint_upper");
  if ((elastic_k.array() <= 0).any()) throw UsageError("elastic_k must be > 0");
  if ((link_lengths.array() <= 0).any()) throw UsageError("link_lengths must be > 0");
  if ((link_masses.array() < 0).any()) throw UsageError("link_masses must be >= 0");
  if ((damping.array() < 0).any()) throw UsageError("damping must be >= 0");
  if ((joint_lower.array() >= joint_upper.array()).any()) {
    throw UsageError("joint_lower must be below joint_upper");
  }
  if (payload_mass < 0) throw UsageError("payload_mass must be >= 0");
}

bool ArmPlant::WithinLimits(const Eigen::VectorXd& theta, double tol) const {
  if (theta.size() != n_joints) return false;
  for (int j = 0; j < n_joints; ++j) {
    if (!(theta[j] >= joint_lower[j] - tol && theta[j] <= joint_upper[j] + tol)) {
      return false;
    }
  }
  return true;
}

ArmPlant ArmPlant::WithAddedMuscle(const Eigen::VectorXd& arms,
                                   double rest_length, double k) const {
  CheckSize(arms, n_joints, "added muscle moment arms");
  ArmPlant p = *this;
  p.n_muscles = n_muscles + 1;
  p.moment_arms.conservativeResize(p.n_muscles, n_joints);
  p.moment_arms.row(n_muscles) = arms.transpose();
  p.moment_arm_slopes.conservativeResize(p.n_muscles, n_joints);
  p.moment_arm_slopes.row(n_muscles).setZero();
  p.elastic_k.conservativeResize(p.n_muscles);
  p.elastic_k[n_muscles] = k;
  p.rest_lengths.conservativeResize(p.n_muscles);
  p.rest_lengths[n_muscles] = rest_length;
  return p;
}

Eigen::VectorXd MuscleLengthsUnchecked(const ArmPlant& plant,
                                       const Eigen::VectorXd& theta) {
  CheckSize(theta, plant.n_joints, "theta");
  Eigen::VectorXd l = plant.rest_lengths;
  for (int i = 0; i < plant.n_muscles; ++i) {
    for (int j = 0; j < plant.n_joints; ++j) {
      l[i] += plant.moment_arms(i, j) * theta[j] +
              0.5 * plant.moment_arm_slopes(i, j) * theta[j] * theta[j];
    }
  }
  return l;
}

Eigen::VectorXd MuscleLengths(const ArmPlant& plant,
                              const Eigen::VectorXd& theta) {
  if (!plant.WithinLimits(theta)) {
    throw DomainError("joint angles outside joint limits");
  }
  return MuscleLengthsUnchecked(plant, theta);
}

Eigen::MatrixXd MuscleJacobian(const ArmPlant& plant,
                               const Eigen::VectorXd& theta) {
  CheckSize(theta, plant.n_joints, "theta");
  Eigen::MatrixXd g = plant.moment_arms;
  for (int j = 0; j < plant.n_joints; ++j) {
    g.col(j) += plant.moment_arm_slopes.col(j) * theta[j];
  }
  return g;
}

Eigen::VectorXd MuscleStretch(const ArmPlant& plant,
                              const Eigen::VectorXd& theta,
                              const Eigen::VectorXd& l) {
  CheckSize(l, plant.n_muscles, "muscle lengths");
  return MuscleLengthsUnchecked(plant, theta) - l;
}

Eigen::VectorXd ElasticTension(const ArmPlant& plant,
                               const Eigen::VectorXd& stretch) {
  CheckSize(stretch, plant.n_muscles, "stretch");
  Eigen::VectorXd d = stretch.cwiseMax(0.0);
  return plant.elastic_k.cwiseProduct(d.cwiseProduct(d));
}

Eigen::VectorXd TensionSlope(const ArmPlant& plant, const Eigen::VectorXd& f) {
  CheckSize(f, plant.n_muscles, "tension");
  return 2.0 * plant.elastic_k.cwiseProduct(f.cwiseMax(0.0)).cwiseSqrt();
}

Eigen::VectorXd MuscleTorque(const ArmPlant& plant,
                             const Eigen::VectorXd& theta,
                             const Eigen::VectorXd& f) {
  CheckSize(f, plant.n_muscles, "tension");
  return -MuscleJacobian(plant, theta).transpose() * f;
}

Eigen::VectorXd GravityTorque(const ArmPlant& plant,
                              const Eigen::VectorXd& theta,
                              double extra_hand_mass) {
  CheckSize(theta, plant.n_joints, "theta");
  Eigen::VectorXd grad;
  GravityDerivatives(plant, theta, extra_hand_mass, &grad, nullptr);
  return -grad;
}

Eigen::Vector2d HandPosition(const ArmPlant& plant,
                             const Eigen::VectorXd& theta) {
  CheckSize(theta, plant.n_joints, "theta");
  Eigen::VectorXd alpha = AbsoluteAngles(theta);
  Eigen::Vector2d p = Eigen::Vector2d::Zero();
  for (int k = 0; k < plant.n_joints; ++k) {
    p += plant.link_lengths[k] *
         Eigen::Vector2d(std::cos(alpha[k]), std::sin(alpha[k]));
  }
  return p;
}

Eigen::MatrixXd HandJacobian(const ArmPlant& plant,
                             const Eigen::VectorXd& theta) {
  CheckSize(theta, plant.n_joints, "theta");
  Eigen::VectorXd alpha = AbsoluteAngles(theta);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2, plant.n_joints);
  for (int k = 0; k < plant.n_joints; ++k) {
    Eigen::Vector2d d(-std::sin(alpha[k]), std::cos(alpha[k]));
    for (int i = 0; i <= k; ++i) jac.col(i) += plant.link_lengths[k] * d;
  }
  return jac;
}

Eigen::MatrixXd JointStiffness(const ArmPlant& plant,
                               const Eigen::VectorXd& theta,
                               const Eigen::VectorXd& f) {
  Eigen::MatrixXd g = MuscleJacobian(plant, theta);
  Eigen::VectorXd slope = TensionSlope(plant, f);
  return g.transpose() * slope.asDiagonal() * g;
}

Equilibrium QuasiStaticSolve(const ArmPlant& plant,
                             const Eigen::VectorXd& l_ref,
                             const Eigen::VectorXd& external_torque,
                             const QuasiStaticOptions& options) {
  plant.Validate();
  CheckSize(l_ref, plant.n_muscles, "l_ref");
  CheckSize(external_torque, plant.n_joints, "external_torque");
  if (!l_ref.allFinite() || !external_torque.allFinite()) {
    throw DomainError("non-finite quasi-static input");
  }
  const int n = plant.n_joints;
  const double hand_mass = options.extra_hand_mass;

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
  if (options.initial_theta) {
    CheckSize(*options.initial_theta, n, "initial_theta");
    theta = *options.initial_theta;
  }
  theta = theta.cwiseMax(plant.joint_lower).cwiseMin(plant.joint_upper);

  auto potential = [&](const Eigen::VectorXd& q) {
    return ElasticEnergy(plant, MuscleStretch(plant, q, l_ref)) +
           GravityEnergy(plant, q, hand_mass) - external_torque.dot(q);
  };
  // gradient of the potential; the residual torque is its negative
  auto gradient = [&](const Eigen::VectorXd& q, Eigen::VectorXd* f) {
    *f = ElasticTension(plant, MuscleStretch(plant, q, l_ref));
    Eigen::VectorXd grav;
    GravityDerivatives(plant, q, hand_mass, &grav, nullptr);
    return Eigen::VectorXd(MuscleJacobian(plant, q).transpose() * *f + grav -
                           external_torque);
  };

  Eigen::VectorXd f;
  Eigen::VectorXd grad = gradient(theta, &f);
  double value = potential(theta);
  double mu = 0.0;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    if (grad.norm() < options.tolerance) break;

    // Hessian of the potential
    Eigen::MatrixXd g = MuscleJacobian(plant, theta);
    Eigen::VectorXd stretch = MuscleStretch(plant, theta, l_ref).cwiseMax(0.0);
    Eigen::VectorXd slope = 2.0 * plant.elastic_k.cwiseProduct(stretch);
    Eigen::MatrixXd hess = g.transpose() * slope.asDiagonal() * g;
    for (int j = 0; j < n; ++j) {
      hess(j, j) += plant.moment_arm_slopes.col(j).dot(f);
    }
    Eigen::MatrixXd grav_hess;
    GravityDerivatives(plant, theta, hand_mass, nullptr, &grav_hess);
    hess += grav_hess;

    // Levenberg-Marquardt safeguarded Newton step with backtracking
    const double scale = std::max(1e-6, hess.diagonal().cwiseAbs().maxCoeff());
    bool accepted = false;
    for (int attempt = 0; attempt < 60 && !accepted; ++attempt) {
      Eigen::MatrixXd damped = hess;
      damped.diagonal().array() += mu * scale;
      Eigen::LLT<Eigen::MatrixXd> llt(damped);
      if (llt.info() != Eigen::Success) {
        mu = std::max(1e-8, mu * 10.0);
        continue;
      }
      Eigen::VectorXd step = -llt.solve(grad);
      Eigen::VectorXd trial =
          (theta + step).cwiseMax(plant.joint_lower).cwiseMin(plant.joint_upper);
      const double trial_value = potential(trial);
      Eigen::VectorXd trial_f;
      Eigen::VectorXd trial_grad = gradient(trial, &trial_f);
      // near convergence the potential decrease drops below round-off, so
      // a smaller residual also counts as progress
      if (trial_value < value || trial_grad.norm() < grad.norm()) {
        theta = trial;
        value = trial_value;
        grad = trial_grad;
        f = trial_f;
        mu = mu * 0.1;
        if (mu < 1e-12) mu = 0.0;
        accepted = true;
      } else {
        mu = std::max(1e-8, mu * 10.0);
      }
    }
    if (!accepted) break;
  }
  const double residual = grad.norm();
  if (!(residual < options.tolerance)) {
    throw SolverError("quasi-static solve did not converge", residual);
  }
  return Equilibrium{theta, f, residual, it};
}

}  // namespace muskwheel
