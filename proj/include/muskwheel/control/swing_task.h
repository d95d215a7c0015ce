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


#ifndef MUSKWHEEL_CONTROL_SWING_TASK_H_
#define MUSKWHEEL_CONTROL_SWING_TASK_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "muskwheel/control/arm_rig.h"
#include "muskwheel/plant/arm_plant.h"
#include "muskwheel/plant/dynamics.h"
#include "muskwheel/schema/dynamic_schema.h"

namespace muskwheel {

// A pendulum hanging from the hand, swung by posture/stiffness commands.
// The arm is heavier and the tendons softer than the default plant so the
// series elasticity matters at swing speeds.
struct SwingObject {
  std::string id;
  double length = 0.3;  // m
  double mass = 0.2;    // kg
  double damping = 0.05;
};

struct SwingTask {
  ArmPlant plant;
  RigOptions rig;
  std::vector<SwingObject> objects;
  Eigen::VectorXd theta0;  // start posture
  double k0 = 2.0;         // start stiffness, N m/rad
  double theta_max = 0.5;  // |theta_ref| bound, rad
  double k_min = 1.0;
  double k_max = 4.0;
  int knot_spacing = 5;
  // chance that a bang-bang posture knot repeats the previous one in the
  // training data; held postures let the object swing out
  double data_hold = 0.7;

  static SwingTask Default();

  const SwingObject& Object(const std::string& id) const;
  ArmRig MakeRig(const std::string& id) const;
  Eigen::VectorXd u_lower() const;
  Eigen::VectorXd u_upper() const;
};

// Uniform knots within [lower, upper]; half of the draws push the posture
// channels to their bounds (bang-bang), which excites the fast swings.
// With probability `hold` a bang-bang knot repeats the previous one.
Eigen::MatrixXd RandomKnots(std::mt19937_64* rng, int count,
                            const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper, double hold = 0.0);

// Random-knot runs of `length` steps, `per_object` for every object, in
// object order.
std::vector<DynSequence> GenerateSwingData(const SwingTask& task,
                                           int per_object, int length,
                                           uint64_t seed);

// Runs knots (u_dim x KnotCount) over `horizon` steps from the start state.
Episode RunKnots(const SwingTask& task, ArmRig* rig, const Eigen::MatrixXd& knots,
                 int horizon);

struct SwingPlanOptions {
  int horizon = 40;
  int samples = 1000;  // random knots scored by the model
  int starts = 8;     // best samples refined by gradient descent
  DynControlOptions control;
  uint64_t seed = 23;
};

// Model-only planning: scores random knots under the schema, then runs
// OptimizeControls from the best few and keeps the lowest loss.
DynControlResult PlanSwing(const DynamicsNet& net, const SwingTask& task,
                           const Eigen::VectorXd& s0, const DynGoal& goal,
                           const Eigen::VectorXd& p,
                           const Eigen::VectorXd& u_lower,
                           const Eigen::VectorXd& u_upper,
                           const SwingPlanOptions& options);

struct RefineOptions {
  int budget = 100;    // plant trials
  double step = 0.3;   // initial gradient step, normalized units
  double probe = 0.1;  // initial coordinate probe, normalized units
};

// Improves knots on the plant for peak tip speed. Directions come from the
// schema gradient of the final-step tip speed and are accepted only when a
// plant trial improves; when the line search stalls, single knots are
// probed instead. With vary_stiffness false the stiffness row stays at its
// current value.
Eigen::MatrixXd RefineOnPlant(const DynamicsNet& net, const SwingTask& task,
                              ArmRig* rig, const Eigen::VectorXd& p,
                              const Eigen::MatrixXd& knots, bool vary_stiffness,
                              int horizon, const RefineOptions& options,
                              double* peak = nullptr);

struct StiffnessSweepOptions {
  SwingPlanOptions plan;
  RefineOptions refine;
  double k_step = 0.5;
  int final_budget = 400;  // plant trials for each final arm
};

struct StiffnessComparison {
  std::vector<double> fixed_k;
  std::vector<double> fixed_peak;  // after planning and refinement
  double best_fixed_k = 0.0;
  double best_fixed_peak = 0.0;  // best fixed k refined once more
  double variable_peak = 0.0;
  Eigen::MatrixXd best_fixed_knots;
  Eigen::MatrixXd variable_knots;

  double gain() const { return variable_peak / best_fixed_peak - 1.0; }
};

// Peak tip speed with a constant stiffness swept over [k_min, k_max]
// against a time-varying one. The best constant-k solution is refined
// until it stalls (or final_budget trials); the time-varying arm then
// continues from it with the same budget, so the gain is what varying k
// adds at the constant-k optimum.
StiffnessComparison CompareStiffness(const DynamicsNet& net,
                                     const SwingTask& task,
                                     const std::string& object_id,
                                     const StiffnessSweepOptions& options = {});

}  // namespace muskwheel

#endif  // MUSKWHEEL_CONTROL_SWING_TASK_H_
