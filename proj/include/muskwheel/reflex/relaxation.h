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

#ifndef MUSKWHEEL_REFLEX_RELAXATION_H_
#define MUSKWHEEL_REFLEX_RELAXATION_H_

#include <vector>

#include <Eigen/Core>

#include "muskwheel/plant/arm_plant.h"
#include "muskwheel/reflex/tension_qp.h"

namespace muskwheel {

struct RelaxOptions {
  double margin = 2.0;         // N above f_nec a muscle is relaxed to
  double increment = 0.5e-3;   // m of lengthening per inner step
  double posture_tol = 0.02;   // rad, per joint
  // Ascending sweeps repeated until one makes no progress. Relaxing one
  // antagonist lets its partner relax further on the next sweep.
  int max_sweeps = 100;
  Eigen::VectorXd external_torque;  // N m, empty means zero
  double extra_hand_mass = 0.0;
};

struct RelaxResult {
  Eigen::VectorXd offsets;   // m, >= 0, added to the length command
  Eigen::VectorXd theta;     // predicted posture after relaxation
  Eigen::VectorXd tension;   // predicted tensions after relaxation
  std::vector<int> order;    // muscles sorted by ascending f_nec
  int sweeps = 0;
};

// Lengthens muscle commands, lowest necessary tension first, while the
// predicted posture stays within posture_tol of the current one and the
// total tension does not increase. The plant's quasi-static model predicts
// the effect of each increment.
RelaxResult RelaxStep(const ArmPlant& plant, const Eigen::VectorXd& f_nec,
                      const Eigen::VectorXd& f_current,
                      const Eigen::VectorXd& l_current,
                      const RelaxOptions& options = {});

// tau_nec for holding `theta` against gravity: the torque the muscles must
// produce, i.e. minus the gravity torque.
Eigen::VectorXd HoldingTorque(const ArmPlant& plant,
                              const Eigen::VectorXd& theta,
                              double extra_hand_mass = 0.0);

// QP instance for holding the current posture with default weights
// (W1 = I, W2 = 1e6 I).
RelaxProblem HoldingProblem(const ArmPlant& plant, const Eigen::VectorXd& theta,
                            double f_min, double extra_hand_mass = 0.0);

}  // namespace muskwheel

#endif  // MUSKWHEEL_REFLEX_RELAXATION_H_
