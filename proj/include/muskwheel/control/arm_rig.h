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

#ifndef MUSKWHEEL_CONTROL_ARM_RIG_H_
#define MUSKWHEEL_CONTROL_ARM_RIG_H_

#include <Eigen/Core>

#include "muskwheel/control/stiffness_command.h"
#include "muskwheel/plant/arm_plant.h"
#include "muskwheel/plant/dynamics.h"

namespace muskwheel {

struct RigOptions {
  double dt = 0.02;   // s, control period
  int substeps = 10;  // plant integration steps per control period
  // Largest actuator length rate, m/s; <= 0 means commands apply at once.
  // The winding motors of real muscle modules are speed limited.
  double actuator_speed = 0.0;
  // Observe a marker this far along the first object rod instead of the
  // object tip; <= 0 observes the tip. A marker at a fixed distance looks
  // the same on objects of different length until they swing.
  double marker_distance = 0.0;
};

// Arm plus object driven by posture/stiffness commands u = [theta_ref,
// k_ref]. Every control period the command is turned into actuator lengths
// with CommandForStiffness (compensating the object's weight at the hand)
// and the plant is integrated over substeps.
//
// Observation s = [tip or marker position (2), its velocity (2), f, l],
// where l is the actuator length in force. With a speed limit the
// actuators slew toward the commanded lengths, so l lags the command.
class ArmRig {
 public:
  ArmRig(const ArmPlant& plant, const FlexibleObject& obj,
         const RigOptions& options = {});

  static int ObservationSize(const ArmPlant& plant) {
    return 4 + 2 * plant.n_muscles;
  }
  static int ControlSize(const ArmPlant& plant) { return plant.n_joints + 1; }

  // Rest at the equilibrium of the command (theta0, k0) with the object
  // hanging still.
  void Reset(const Eigen::VectorXd& theta0, double k0);

  Eigen::VectorXd Step(const Eigen::VectorXd& u);
  Eigen::VectorXd Observe() const;

  const ArmPlant& plant() const { return plant_; }
  const FlexibleObject& object() const { return obj_; }
  const DynamicState& state() const { return state_; }
  const Eigen::VectorXd& l_ref() const { return l_ref_; }
  const Eigen::VectorXd& l_target() const { return l_target_; }
  double dt() const { return options_.dt; }

 private:
  ArmPlant plant_;
  FlexibleObject obj_;
  RigOptions options_;
  StiffnessCommandOptions command_;
  DynamicState state_;
  Eigen::VectorXd l_ref_;     // actuator lengths in force
  Eigen::VectorXd l_target_;  // last commanded lengths
};

// Observations (T + 1 columns) and controls (T columns) of one run.
struct Episode {
  Eigen::MatrixXd s;
  Eigen::MatrixXd u;
};

// Resets the rig and applies the control columns in order.
Episode RunEpisode(ArmRig* rig, const Eigen::VectorXd& theta0, double k0,
                   const Eigen::MatrixXd& u);

// Largest tip speed over the observations, m/s.
double PeakTipSpeed(const Eigen::MatrixXd& s);

}  // namespace muskwheel

#endif  // MUSKWHEEL_CONTROL_ARM_RIG_H_
