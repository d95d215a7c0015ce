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

#ifndef MUSKWHEEL_CONTROL_STIFFNESS_COMMAND_H_
#define MUSKWHEEL_CONTROL_STIFFNESS_COMMAND_H_

#include <Eigen/Core>

#include "muskwheel/plant/arm_plant.h"

namespace muskwheel {

// Converts a posture/stiffness target into actuator lengths from the plant
// geometry alone. Tensions come from the holding QP at theta_ref with a
// uniform tension floor; the floor is bisected until the mean diagonal
// joint stiffness equals k_ref. Targets below the stiffness reachable at
// the smallest floor saturate there, targets above the largest floor
// saturate at it.
struct StiffnessCommandOptions {
  double floor_min = 0.5;    // N
  double floor_max = 400.0;  // N
  double extra_hand_mass = 0.0;  // kg carried at the hand
  int bisection_steps = 50;
};

struct StiffnessCommand {
  Eigen::VectorXd l_ref;    // m
  Eigen::VectorXd tension;  // N, planned at theta_ref
  double floor = 0.0;       // N
  double stiffness = 0.0;   // N m/rad, achieved mean diagonal
};

// theta_ref is clamped into the joint limits.
StiffnessCommand CommandForStiffness(
    const ArmPlant& plant, const Eigen::VectorXd& theta_ref, double k_ref,
    const StiffnessCommandOptions& options = {});

// Mean of the diagonal of G^T diag(2 sqrt(k f)) G.
double MeanDiagonalStiffness(const ArmPlant& plant,
                             const Eigen::VectorXd& theta,
                             const Eigen::VectorXd& f);

}  // namespace muskwheel

#endif  // MUSKWHEEL_CONTROL_STIFFNESS_COMMAND_H_
