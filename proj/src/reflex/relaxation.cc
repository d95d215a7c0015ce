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

#include "muskwheel/reflex/relaxation.h"

#include <algorithm>
#include <numeric>

#include "muskwheel/core/errors.h"

namespace muskwheel {

Eigen::VectorXd HoldingTorque(const ArmPlant& plant,
                              const Eigen::VectorXd& theta,
                              double extra_hand_mass) {
  return -GravityTorque(plant, theta, extra_hand_mass);
}

RelaxProblem HoldingProblem(const ArmPlant& plant, const Eigen::VectorXd& theta,
                            double f_min, double extra_hand_mass) {
  RelaxProblem p;
  p.tau_nec = HoldingTorque(plant, theta, extra_hand_mass);
  p.G = MuscleJacobian(plant, theta);
  p.f_min = Eigen::VectorXd::Constant(plant.n_muscles, f_min);
  p.w1 = Eigen::VectorXd::Ones(plant.n_muscles);
  p.w2 = Eigen::VectorXd::Constant(plant.n_joints, 1e6);
  return p;
}

RelaxResult RelaxStep(const ArmPlant& plant, const Eigen::VectorXd& f_nec,
                      const Eigen::VectorXd& f_current,
                      const Eigen::VectorXd& l_current,
                      const RelaxOptions& options) {
  const int m = plant.n_muscles;
  if (f_nec.size() != m || f_current.size() != m || l_current.size() != m) {
    throw UsageError("relax_step vectors must have one entry per muscle");
  }
  Eigen::VectorXd external = options.external_torque.size() == 0
                                 ? Eigen::VectorXd::Zero(plant.n_joints)
                                 : options.external_torque;

  RelaxResult result;
  result.offsets = Eigen::VectorXd::Zero(m);
  result.order.resize(m);
  std::iota(result.order.begin(), result.order.end(), 0);
  std::stable_sort(result.order.begin(), result.order.end(),
                   [&](int a, int b) { return f_nec[a] < f_nec[b]; });

  QuasiStaticOptions qs;
  qs.extra_hand_mass = options.extra_hand_mass;
  const Equilibrium start = QuasiStaticSolve(plant, l_current, external, qs);
  result.theta = start.theta;
  result.tension = start.tension;

  bool needs_work = false;
  for (int i = 0; i < m; ++i) {
    if (f_current[i] > f_nec[i] + options.margin) needs_work = true;
  }
  if (!needs_work) return result;

  double total = result.tension.sum();
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    bool progress = false;
    for (int i : result.order) {
      while (result.tension[i] > f_nec[i] + options.margin) {
        Eigen::VectorXd trial = result.offsets;
        trial[i] += options.increment;
        qs.initial_theta = &result.theta;
        const Equilibrium eq =
            QuasiStaticSolve(plant, l_current + trial, external, qs);
        const double shift = (eq.theta - start.theta).cwiseAbs().maxCoeff();
        const double trial_total = eq.tension.sum();
        if (shift >= options.posture_tol || trial_total > total) break;
        result.offsets = trial;
        result.theta = eq.theta;
        result.tension = eq.tension;
        total = trial_total;
        progress = true;
      }
    }
    result.sweeps = sweep + 1;
    if (!progress) break;
  }
  return result;
}

}  // namespace muskwheel
