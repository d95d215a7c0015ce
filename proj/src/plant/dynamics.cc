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

#include "muskwheel/plant/dynamics.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>

#include "muskwheel/core/errors.h"

namespace muskwheel {

namespace {

// One c * (cos a, sin a) contribution to a body position.
struct Term {
  double coef;
  int angle;
};

struct Body {
  double mass = 0.0;
  double inertia = 0.0;  // about the CoM, for arm links
  int rot_angle = -1;    // angle the body rotates with (-1: point mass)
  std::vector<Term> terms;
};

// Coupled arm/object system in generalized coordinates.
class ChainModel {
 public:
  ChainModel(const ArmPlant& plant, const FlexibleObject& obj)
      : n_arm_(plant.n_joints), n_obj_(obj.ActiveMasses()) {
    const int n = n_arm_;
    std::vector<Term> hand;
    for (int k = 0; k < n; ++k) {
      Body link;
      link.mass = plant.link_masses[k];
      link.inertia = plant.link_masses[k] * plant.link_lengths[k] *
                     plant.link_lengths[k] / 12.0;
      link.rot_angle = k;
      link.terms = hand;
      link.terms.push_back({0.5 * plant.link_lengths[k], k});
      bodies_.push_back(link);
      hand.push_back({plant.link_lengths[k], k});
    }
    if (plant.payload_mass > 0.0) {
      Body payload;
      payload.mass = plant.payload_mass;
      payload.terms = hand;
      bodies_.push_back(payload);
    }
    std::vector<Term> chain = hand;
    for (int m = 0; m < n_obj_; ++m) {
      chain.push_back({obj.lengths[m], n + m});
      Body mass;
      mass.mass = obj.masses[m];
      mass.terms = chain;
      bodies_.push_back(mass);
      rod_lengths_.push_back(obj.lengths[m]);
    }
    tip_terms_ = chain;
    object_damping_ = obj.damping;
    gravity_ = plant.gravity;
  }

  int size() const { return n_arm_ + n_obj_; }

  // absolute angle values and rates; arm angles accumulate the joints,
  // object angles are coordinates themselves
  void Angles(const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
              Eigen::VectorXd* a, Eigen::VectorXd* ad) const {
    a->resize(size());
    ad->resize(size());
    double acc = 0.0, accd = 0.0;
    for (int k = 0; k < n_arm_; ++k) {
      acc += q[k];
      accd += qd[k];
      (*a)[k] = acc;
      (*ad)[k] = accd;
    }
    for (int m = 0; m < n_obj_; ++m) {
      (*a)[n_arm_ + m] = q[n_arm_ + m];
      (*ad)[n_arm_ + m] = qd[n_arm_ + m];
    }
  }

  // d(angle a)/dq_i
  bool AngleDepends(int a, int i) const {
    if (a < n_arm_) return i <= a;
    return i == a;
  }

  void PointKinematics(const std::vector<Term>& terms, const Eigen::VectorXd& a,
                       const Eigen::VectorXd& ad, Eigen::Vector2d* p,
                       Eigen::MatrixXd* jac, Eigen::Vector2d* jdot_qd) const {
    p->setZero();
    jac->setZero(2, size());
    jdot_qd->setZero();
    for (const Term& t : terms) {
      const double c = std::cos(a[t.angle]), s = std::sin(a[t.angle]);
      *p += t.coef * Eigen::Vector2d(c, s);
      for (int i = 0; i < size(); ++i) {
        if (AngleDepends(t.angle, i)) jac->col(i) += t.coef * Eigen::Vector2d(-s, c);
      }
      *jdot_qd -= t.coef * ad[t.angle] * ad[t.angle] * Eigen::Vector2d(c, s);
    }
  }

  // M qdd = rhs; returns M and the gravity/velocity part of rhs.
  void Assemble(const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
                Eigen::MatrixXd* mass, Eigen::VectorXd* force) const {
    Eigen::VectorXd a, ad;
    Angles(q, qd, &a, &ad);
    mass->setZero(size(), size());
    force->setZero(size());
    Eigen::Vector2d p, jdq;
    Eigen::MatrixXd jac;
    for (const Body& b : bodies_) {
      PointKinematics(b.terms, a, ad, &p, &jac, &jdq);
      *mass += b.mass * jac.transpose() * jac;
      *force -= b.mass * jac.transpose() * jdq;
      *force += b.mass * jac.transpose() * Eigen::Vector2d(0.0, -gravity_);
      if (b.rot_angle >= 0) {
        for (int i = 0; i < size(); ++i) {
          for (int j = 0; j < size(); ++j) {
            if (AngleDepends(b.rot_angle, i) && AngleDepends(b.rot_angle, j)) {
              (*mass)(i, j) += b.inertia;
            }
          }
        }
      }
    }
    for (int m = 0; m < n_obj_; ++m) {
      const int i = n_arm_ + m;
      (*force)[i] -= object_damping_ * rod_lengths_[m] * rod_lengths_[m] * qd[i];
    }
  }

  double KineticAndGravity(const Eigen::VectorXd& q,
                           const Eigen::VectorXd& qd) const {
    Eigen::VectorXd a, ad;
    Angles(q, qd, &a, &ad);
    Eigen::Vector2d p, jdq;
    Eigen::MatrixXd jac;
    double e = 0.0;
    for (const Body& b : bodies_) {
      PointKinematics(b.terms, a, ad, &p, &jac, &jdq);
      const Eigen::Vector2d v = jac * qd;
      e += 0.5 * b.mass * v.squaredNorm() + b.mass * gravity_ * p.y();
      if (b.rot_angle >= 0) e += 0.5 * b.inertia * ad[b.rot_angle] * ad[b.rot_angle];
    }
    return e;
  }

  TipState Tip(const Eigen::VectorXd& q, const Eigen::VectorXd& qd) const {
    Eigen::VectorXd a, ad;
    Angles(q, qd, &a, &ad);
    Eigen::Vector2d p, jdq;
    Eigen::MatrixXd jac;
    PointKinematics(tip_terms_, a, ad, &p, &jac, &jdq);
    return {p, jac * qd};
  }

 private:
  int n_arm_;
  int n_obj_;
  std::vector<Body> bodies_;
  std::vector<double> rod_lengths_;
  std::vector<Term> tip_terms_;
  double object_damping_ = 0.0;
  double gravity_ = 9.81;
};

void CheckState(const ChainModel& model, const DynamicState& s) {
  if (s.q.size() != model.size() || s.qd.size() != model.size()) {
    throw UsageError("dynamic state does not match plant/object dimensions");
  }
}

}  // namespace

FlexibleObject FlexibleObject::Pendulum(double length, double mass,
                                        double damping) {
  FlexibleObject o;
  o.kind = Kind::kPendulumMass;
  o.lengths = {length};
  o.masses = {mass};
  o.damping = damping;
  return o;
}

FlexibleObject FlexibleObject::TwoMassChain(double l1, double m1, double l2,
                                            double m2, double damping) {
  FlexibleObject o;
  o.kind = Kind::kTwoMassChain;
  o.lengths = {l1, l2};
  o.masses = {m1, m2};
  o.damping = damping;
  return o;
}

int FlexibleObject::ActiveMasses() const {
  if (!attach_hand) return 0;
  switch (kind) {
    case Kind::kNone:
      return 0;
    case Kind::kPendulumMass:
      return 1;
    case Kind::kTwoMassChain:
      return 2;
  }
  return 0;
}

double FlexibleObject::TotalMass() const {
  double m = 0.0;
  for (int i = 0; i < ActiveMasses(); ++i) m += masses[i];
  return m;
}

void FlexibleObject::Validate() const {
  if (kind == Kind::kNone) return;
  const size_t n = kind == Kind::kPendulumMass ? 1 : 2;
  if (lengths.size() != n || masses.size() != n) {
    throw UsageError("flexible object needs one length and mass per link");
  }
  for (size_t i = 0; i < n; ++i) {
    if (!(lengths[i] > 0.0) || !(masses[i] > 0.0)) {
      throw UsageError("flexible object lengths and masses must be > 0");
    }
  }
  if (damping < 0.0) throw UsageError("object damping must be >= 0");
}

DynamicState RestState(const ArmPlant& plant, const FlexibleObject& obj,
                       const Eigen::VectorXd& theta) {
  const int n = plant.n_joints + obj.ActiveMasses();
  DynamicState s;
  s.q = Eigen::VectorXd::Constant(n, -std::numbers::pi / 2.0);
  s.q.head(plant.n_joints) = theta;
  s.qd = Eigen::VectorXd::Zero(n);
  return s;
}

Eigen::VectorXd StateTensions(const ArmPlant& plant, const DynamicState& state,
                              const Eigen::VectorXd& l_ref) {
  return ElasticTension(
      plant, MuscleStretch(plant, state.q.head(plant.n_joints), l_ref));
}

DynamicState StepDynamics(const ArmPlant& plant, const FlexibleObject& obj,
                          const DynamicState& state,
                          const Eigen::VectorXd& l_ref, double dt,
                          const StepOptions& options) {
  if (!(dt > 0.0 && dt <= 0.01)) throw UsageError("dt must be in (0, 0.01]");
  ChainModel model(plant, obj);
  CheckState(model, state);
  const int n = plant.n_joints;

  Eigen::MatrixXd mass;
  Eigen::VectorXd force;
  model.Assemble(state.q, state.qd, &mass, &force);
  const Eigen::VectorXd theta = state.q.head(n);
  const Eigen::VectorXd f = StateTensions(plant, state, l_ref);
  force.head(n) += MuscleTorque(plant, theta, f);
  force.head(n) -= plant.damping.cwiseProduct(state.qd.head(n));

  DynamicState next = state;
  Eigen::VectorXd qdd = Eigen::VectorXd::Zero(model.size());
  if (options.lock_arm) {
    const int m = model.size() - n;
    if (m > 0) {
      qdd.tail(m) = mass.bottomRightCorner(m, m).ldlt().solve(force.tail(m));
    }
    next.qd.head(n).setZero();
  } else {
    qdd = mass.ldlt().solve(force);
  }
  next.qd += dt * qdd;
  if (options.lock_arm) next.qd.head(n).setZero();
  next.q += dt * next.qd;
  next.time += dt;
  if (!next.q.allFinite() || !next.qd.allFinite()) {
    throw IntegrationError("non-finite state at t=" + std::to_string(next.time));
  }
  return next;
}

double MechanicalEnergy(const ArmPlant& plant, const FlexibleObject& obj,
                        const DynamicState& state,
                        const Eigen::VectorXd& l_ref) {
  ChainModel model(plant, obj);
  CheckState(model, state);
  Eigen::VectorXd stretch =
      MuscleStretch(plant, state.q.head(plant.n_joints), l_ref).cwiseMax(0.0);
  double elastic = 0.0;
  for (int i = 0; i < plant.n_muscles; ++i) {
    elastic += plant.elastic_k[i] * std::pow(stretch[i], 3) / 3.0;
  }
  return model.KineticAndGravity(state.q, state.qd) + elastic;
}

TipState ObjectTip(const ArmPlant& plant, const FlexibleObject& obj,
                   const DynamicState& state) {
  ChainModel model(plant, obj);
  CheckState(model, state);
  return model.Tip(state.q, state.qd);
}

}  // namespace muskwheel
