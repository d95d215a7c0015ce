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

#include "muskwheel/control/stiffness_command.h"

#include <cmath>

#include "muskwheel/core/errors.h"
#include "muskwheel/reflex/relaxation.h"
#include "muskwheel/reflex/tension_qp.h"

namespace muskwheel {

double MeanDiagonalStiffness(const ArmPlant& plant,
                             const Eigen::VectorXd& theta,
                             const Eigen::VectorXd& f) {
  return JointStiffness(plant, theta, f).diagonal().mean();
}

StiffnessCommand CommandForStiffness(const ArmPlant& plant,
                                     const Eigen::VectorXd& theta_ref,
                                     double k_ref,
                                     const StiffnessCommandOptions& options) {
  if (theta_ref.size() != plant.n_joints || !std::isfinite(k_ref)) {
    throw UsageError("stiffness command needs a finite target per joint");
  }
  const Eigen::VectorXd theta =
      theta_ref.cwiseMax(plant.joint_lower).cwiseMin(plant.joint_upper);
  auto plan = [&](double floor) {
    RelaxProblem qp =
        HoldingProblem(plant, theta, floor, options.extra_hand_mass);
    return SolveNecessaryTension(qp).x;
  };

  double lo = options.floor_min, hi = options.floor_max;
  Eigen::VectorXd f = plan(lo);
  if (MeanDiagonalStiffness(plant, theta, f) < k_ref) {
    f = plan(hi);
    if (MeanDiagonalStiffness(plant, theta, f) > k_ref) {
      for (int it = 0; it < options.bisection_steps; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (MeanDiagonalStiffness(plant, theta, plan(mid)) < k_ref) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      f = plan(hi);
    } else {
      lo = hi;
    }
  } else {
    hi = lo;
  }

  StiffnessCommand cmd;
  cmd.tension = f;
  cmd.floor = hi;
  cmd.stiffness = MeanDiagonalStiffness(plant, theta, f);
  cmd.l_ref = MuscleLengths(plant, theta) -
              f.cwiseMax(0.0).cwiseQuotient(plant.elastic_k).cwiseSqrt();
  return cmd;
}

}  // namespace muskwheel
