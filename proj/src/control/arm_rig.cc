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

#include "muskwheel/control/arm_rig.h"

#include <algorithm>
#include <cmath>

#include "muskwheel/core/errors.h"

namespace muskwheel {

ArmRig::ArmRig(const ArmPlant& plant, const FlexibleObject& obj,
               const RigOptions& options)
    : plant_(plant), obj_(obj), options_(options) {
  plant_.Validate();
  obj_.Validate();
  if (!(options.dt > 0.0) || options.substeps < 1 ||
      options.dt / options.substeps > 0.01) {
    throw UsageError("rig needs dt > 0 and substeps keeping dt/substeps <= 0.01");
  }
  command_.extra_hand_mass = obj_.TotalMass();
  Reset(Eigen::VectorXd::Zero(plant_.n_joints), 1.0);
}

void ArmRig::Reset(const Eigen::VectorXd& theta0, double k0) {
  l_ref_ = CommandForStiffness(plant_, theta0, k0, command_).l_ref;
  l_target_ = l_ref_;
  QuasiStaticOptions qs;
  qs.extra_hand_mass = obj_.TotalMass();
  const Eigen::VectorXd start =
      theta0.cwiseMax(plant_.joint_lower).cwiseMin(plant_.joint_upper);
  qs.initial_theta = &start;
  const Equilibrium eq = QuasiStaticSolve(
      plant_, l_ref_, Eigen::VectorXd::Zero(plant_.n_joints), qs);
  state_ = RestState(plant_, obj_, eq.theta);
}

Eigen::VectorXd ArmRig::Step(const Eigen::VectorXd& u) {
  if (u.size() != ControlSize(plant_)) throw UsageError("control size mismatch");
  l_target_ = CommandForStiffness(plant_, u.head(plant_.n_joints),
                                  u[plant_.n_joints], command_)
                  .l_ref;
  const double h = options_.dt / options_.substeps;
  for (int i = 0; i < options_.substeps; ++i) {
    if (options_.actuator_speed > 0.0) {
      const double max_step = options_.actuator_speed * h;
      l_ref_ += (l_target_ - l_ref_).cwiseMax(-max_step).cwiseMin(max_step);
    } else {
      l_ref_ = l_target_;
    }
    state_ = StepDynamics(plant_, obj_, state_, l_ref_, h);
  }
  return Observe();
}

Eigen::VectorXd ArmRig::Observe() const {
  const int nm = plant_.n_muscles;
  TipState tip = ObjectTip(plant_, obj_, state_);
  if (options_.marker_distance > 0.0 && obj_.ActiveMasses() > 0) {
    const int nj = plant_.n_joints;
    DynamicState arm;
    arm.q = state_.q.head(nj);
    arm.qd = state_.qd.head(nj);
    const TipState hand = ObjectTip(plant_, FlexibleObject::None(), arm);
    const double phi = state_.q[nj], rate = state_.qd[nj];
    const Eigen::Vector2d dir(std::cos(phi), std::sin(phi));
    tip.position = hand.position + options_.marker_distance * dir;
    tip.velocity = hand.velocity +
                   options_.marker_distance * rate * Eigen::Vector2d(-dir.y(), dir.x());
  }
  Eigen::VectorXd s(ObservationSize(plant_));
  s.segment<2>(0) = tip.position;
  s.segment<2>(2) = tip.velocity;
  s.segment(4, nm) = StateTensions(plant_, state_, l_ref_);
  s.segment(4 + nm, nm) = l_ref_;
  return s;
}

Episode RunEpisode(ArmRig* rig, const Eigen::VectorXd& theta0, double k0,
                   const Eigen::MatrixXd& u) {
  rig->Reset(theta0, k0);
  Episode ep;
  ep.u = u;
  ep.s.resize(ArmRig::ObservationSize(rig->plant()), u.cols() + 1);
  ep.s.col(0) = rig->Observe();
  for (int t = 0; t < u.cols(); ++t) ep.s.col(t + 1) = rig->Step(u.col(t));
  return ep;
}

double PeakTipSpeed(const Eigen::MatrixXd& s) {
  double peak = 0.0;
  for (int t = 0; t < s.cols(); ++t) {
    peak = std::max(peak, s.col(t).segment<2>(2).norm());
  }
  return peak;
}

}  // namespace muskwheel
