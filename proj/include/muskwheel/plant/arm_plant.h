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

#ifndef MUSKWHEEL_PLANT_ARM_PLANT_H_
#define MUSKWHEEL_PLANT_ARM_PLANT_H_

#include <Eigen/Core>

namespace muskwheel {

// Planar tendon-driven arm moving in the vertical plane.
//
// Joint 0 is measured from the horizontal, later joints relative to their
// parent link; positive angles are counter-clockwise. Each muscle has a
// one-sided quadratic series-elastic element, f = k * max(0, delta)^2, where
// the stretch delta = g(theta) - l is the path length minus the actuator
// (commanded) length. The muscle Jacobian G = dg/dtheta is
//
//   G_ij(theta) = moment_arms(i, j) + moment_arm_slopes(i, j) * theta_j
//
// and muscles act on the joints with tau = -G^T f.
struct ArmPlant {
  int n_joints = 2;
  int n_muscles = 4;
  Eigen::MatrixXd moment_arms;        // n_muscles x n_joints, m/rad at 0
  Eigen::MatrixXd moment_arm_slopes;  // n_muscles x n_joints, m/rad^2
  Eigen::VectorXd elastic_k;          // N/m^2
  Eigen::VectorXd rest_lengths;       // m, path length at theta = 0
  Eigen::VectorXd link_lengths;       // m
  Eigen::VectorXd link_masses;        // kg, uniform rods
  Eigen::VectorXd damping;            // N m s/rad
  Eigen::VectorXd joint_lower;        // rad
  Eigen::VectorXd joint_upper;        // rad
  double payload_mass = 0.0;          // kg at the hand
  double gravity = 9.81;              // m/s^2

  // 2 joints, 4 muscles in two mono-articular antagonist pairs
  // (flexor, extensor) with 0.02 m moment arms.
  static ArmPlant Default();

  // Throws UsageError on inconsistent dimensions or non-physical values.
  void Validate() const;

  bool WithinLimits(const Eigen::VectorXd& theta, double tol = 1e-9) const;

  // Returns a copy with one more muscle. `arms` is its moment-arm row
  // (signed, length n_joints).
  ArmPlant WithAddedMuscle(const Eigen::VectorXd& arms, double rest_length,
                           double k) const;
};

// Default moment arm of the muscle appended for the load-sharing scenario.
inline constexpr double kAddedMuscleMomentArm = 0.035;

// Muscle path lengths g(theta). Throws DomainError outside joint limits.
Eigen::VectorXd MuscleLengths(const ArmPlant& plant,
                              const Eigen::VectorXd& theta);

// Same as MuscleLengths without the joint-limit check (used by dynamics,
// where the state may transiently leave the limits).
Eigen::VectorXd MuscleLengthsUnchecked(const ArmPlant& plant,
                                       const Eigen::VectorXd& theta);

// G(theta) = dg/dtheta, n_muscles x n_joints.
Eigen::MatrixXd MuscleJacobian(const ArmPlant& plant,
                               const Eigen::VectorXd& theta);

// Stretch of every muscle for actuator lengths `l` at posture `theta`.
Eigen::VectorXd MuscleStretch(const ArmPlant& plant,
                              const Eigen::VectorXd& theta,
                              const Eigen::VectorXd& l);

// f = k * max(0, delta)^2.
Eigen::VectorXd ElasticTension(const ArmPlant& plant,
                               const Eigen::VectorXd& stretch);

// df/ddelta = 2 k max(0, delta) expressed through the tension,
// 2 sqrt(k f); negative tensions are treated as slack.
Eigen::VectorXd TensionSlope(const ArmPlant& plant, const Eigen::VectorXd& f);

// Joint torque produced by tensions: -G^T f.
Eigen::VectorXd MuscleTorque(const ArmPlant& plant,
                             const Eigen::VectorXd& theta,
                             const Eigen::VectorXd& f);

// Gravity torque acting on the joints (links, payload and an optional extra
// point mass hanging at the hand).
Eigen::VectorXd GravityTorque(const ArmPlant& plant,
                              const Eigen::VectorXd& theta,
                              double extra_hand_mass = 0.0);

// Hand (end of the last link) position in the arm plane, m.
Eigen::Vector2d HandPosition(const ArmPlant& plant,
                             const Eigen::VectorXd& theta);

// Hand Jacobian d(hand)/dtheta, 2 x n_joints.
Eigen::MatrixXd HandJacobian(const ArmPlant& plant,
                             const Eigen::VectorXd& theta);

// K = G^T diag(df/ddelta) G, the elastic joint stiffness, N m/rad.
Eigen::MatrixXd JointStiffness(const ArmPlant& plant,
                               const Eigen::VectorXd& theta,
                               const Eigen::VectorXd& f);

struct QuasiStaticOptions {
  int max_iterations = 200;
  double tolerance = 1e-9;  // N m, residual torque norm
  const Eigen::VectorXd* initial_theta = nullptr;
  double extra_hand_mass = 0.0;
};

struct Equilibrium {
  Eigen::VectorXd theta;
  Eigen::VectorXd tension;
  double residual = 0.0;  // N m
  int iterations = 0;
};

// Posture at which muscle, gravity and external torques balance for
// commanded actuator lengths `l_ref`. Minimizes the total potential with a
// damped Newton method; throws SolverError when the residual stays above
// tolerance.
Equilibrium QuasiStaticSolve(const ArmPlant& plant,
                             const Eigen::VectorXd& l_ref,
                             const Eigen::VectorXd& external_torque,
                             const QuasiStaticOptions& options = {});

}  // namespace muskwheel

#endif  // MUSKWHEEL_PLANT_ARM_PLANT_H_
