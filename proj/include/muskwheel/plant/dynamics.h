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

#ifndef MUSKWHEEL_PLANT_DYNAMICS_H_
#define MUSKWHEEL_PLANT_DYNAMICS_H_

#include <vector>

#include <Eigen/Core>

#include "muskwheel/plant/arm_plant.h"

namespace muskwheel {

// Low-dimensional stand-in for a manipulated deformable object: a chain of
// point masses on massless rods hanging from the hand.
struct FlexibleObject {
  enum class Kind { kNone, kPendulumMass, kTwoMassChain };

  Kind kind = Kind::kNone;
  std::vector<double> lengths;  // m, one per mass
  std::vector<double> masses;   // kg
  double damping = 0.0;         // N s/m, relative to the parent point
  bool attach_hand = true;

  static FlexibleObject None() { return {}; }
  static FlexibleObject Pendulum(double length, double mass,
                                 double damping = 0.0);
  static FlexibleObject TwoMassChain(double l1, double m1, double l2,
                                     double m2, double damping = 0.0);

  // Number of simulated masses (0 when absent or detached).
  int ActiveMasses() const;
  double TotalMass() const;
  void Validate() const;
};

// Generalized coordinates: joint angles followed by the absolute angle of
// every object rod (measured from +x, hanging straight down is -pi/2).
struct DynamicState {
  Eigen::VectorXd q;
  Eigen::VectorXd qd;
  double time = 0.0;
};

struct StepOptions {
  // Freeze the arm (joint velocities held at zero); only the object moves.
  bool lock_arm = false;
};

// State at rest with the arm at `theta` and the object hanging.
DynamicState RestState(const ArmPlant& plant, const FlexibleObject& obj,
                       const Eigen::VectorXd& theta);

// One semi-implicit Euler step of the coupled arm/object dynamics under
// muscle, gravity, damping and object coupling forces. dt in (0, 0.01].
// Throws IntegrationError when the state becomes non-finite.
DynamicState StepDynamics(const ArmPlant& plant, const FlexibleObject& obj,
                          const DynamicState& state,
                          const Eigen::VectorXd& l_ref, double dt,
                          const StepOptions& options = {});

// Kinetic + gravitational + elastic energy for constant l_ref, J.
double MechanicalEnergy(const ArmPlant& plant, const FlexibleObject& obj,
                        const DynamicState& state,
                        const Eigen::VectorXd& l_ref);

// Position and velocity of the object's last mass (the hand when there is
// no object).
struct TipState {
  Eigen::Vector2d position;
  Eigen::Vector2d velocity;
};
TipState ObjectTip(const ArmPlant& plant, const FlexibleObject& obj,
                   const DynamicState& state);

// Muscle tensions at the current state for actuator lengths l_ref.
Eigen::VectorXd StateTensions(const ArmPlant& plant, const DynamicState& state,
                              const Eigen::VectorXd& l_ref);

}  // namespace muskwheel

#endif  // MUSKWHEEL_PLANT_DYNAMICS_H_
