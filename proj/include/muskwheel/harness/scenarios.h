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


#ifndef MUSKWHEEL_HARNESS_SCENARIOS_H_
#define MUSKWHEEL_HARNESS_SCENARIOS_H_

#include <optional>
#include <string>

#include <Eigen/Core>

#include "muskwheel/core/errors.h"
#include "muskwheel/harness/arm_mode.h"
#include "muskwheel/harness/config.h"
#include "muskwheel/harness/report.h"
#include "muskwheel/plant/arm_plant.h"
#include "muskwheel/reflex/relaxation.h"
#include "muskwheel/schema/static_schema.h"

namespace muskwheel {

// Thrown with the module error nested (std::throw_with_nested); what()
// names the scenario and the stage.
class ScenarioError : public Error {
 public:
  using Error::Error;
};

// Scenario plant: defaults with the config overrides applied.
ArmPlant ScenarioArmPlant(const ScenarioConfig& cfg, const ArmPlant& base);

// Schema control that refuses a stiffness target in relaxation mode.
ControlResult GuardedSolveControl(const ArmModeGuard& guard,
                                  const StaticNet& net, const ArmPlant& plant,
                                  const Eigen::VectorXd& theta_ref,
                                  const std::optional<Eigen::VectorXd>& k_ref,
                                  const SensorTriple& current,
                                  const ControlOptions& options = {});

// Relaxation refused in variable-stiffness mode.
RelaxResult GuardedRelaxStep(const ArmModeGuard& guard, const ArmPlant& plant,
                             const Eigen::VectorXd& f_nec,
                             const Eigen::VectorXd& f_current,
                             const Eigen::VectorXd& l_current,
                             const RelaxOptions& options = {});

// Runs the scripted pipeline of cfg.scenario. A pure function of cfg.
Report RunScenario(const ScenarioConfig& cfg);

Report RunTeachDemo(const ScenarioConfig& cfg);
Report RunMuscleAddition(const ScenarioConfig& cfg);
Report RunTableSetting(const ScenarioConfig& cfg);

}  // namespace muskwheel

#endif  // MUSKWHEEL_HARNESS_SCENARIOS_H_
