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

#include <cmath>
#include <random>

#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "gtest/gtest.h"
#include "muskwheel/core/errors.h"
#include "muskwheel/plant/arm_plant.h"
#include "muskwheel/plant/dynamics.h"
#include "muskwheel/plant/thermal_plant.h"
#include "test_plants.h"

namespace muskwheel {
namespace {

// ----- independent 1-D oracle ----- //

// Net torque on a one-joint antagonist plant, written out by hand.
double OneJointTorque(const ArmPlant& p, double theta, const Eigen::Vector2d& l) {
  const double r = p.moment_arms(1, 0);
  const double flexor = p.rest_lengths[0] - r * theta;
  const double extensor = p.rest_lengths[1] + r * theta;
  const double d0 = std::max(0.0, flexor - l[0]);
  const double d1 = std::max(0.0, extensor - l[1]);
  const double f0 = p.elastic_k[0] * d0 * d0;
  const double f1 = p.elastic_k[1] * d1 * d1;
  const double g = p.gravity * std::cos(theta) *
                   (p.link_masses[0] * p.link_lengths[0] / 2 +
                    p.payload_mass * p.link_lengths[0]);
  return r * f0 - r * f1 - g;
}

double BisectEquilibrium(const ArmPlant& p, const Eigen::Vector2d& l) {
  double lo = p.joint_lower[0], hi = p.joint_upper[0];
  // torque decreases with theta (stable equilibrium)
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (OneJointTorque(p, mid, l) > 0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

TEST(MuscleLengths, ZeroAngleIsRest) {
  ArmPlant p = ArmPlant::Default();
  EXPECT_EQ(MuscleLengths(p, Eigen::VectorXd::Zero(2)), p.rest_lengths);
}

TEST(MuscleLengths, LinearRoutingSingleJoint) {
  ArmPlant p = testing::OneJointPlant(0.02, 1e6);
  Eigen::VectorXd theta(1);
  theta << 0.5;
  const Eigen::VectorXd l = MuscleLengths(p, theta);
  EXPECT_NEAR(l[0], p.rest_lengths[0] - 0.01, 1e-15);
  EXPECT_NEAR(l[1], p.rest_lengths[1] + 0.01, 1e-15);
}

TEST(MuscleLengths, OutsideLimitsIsDomainError) {
  ArmPlant p = ArmPlant::Default();
  Eigen::VectorXd theta(2);
  theta << 1.4, 0.0;
  EXPECT_THROW(MuscleLengths(p, theta), DomainError);
}

TEST(MuscleJacobian, MatchesFiniteDifferences) {
  ArmPlant p = testing::CurvedRoutingPlant();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  const double eps = 1e-6;
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd theta(2);
    theta << u(rng), u(rng);
    const Eigen::MatrixXd g = MuscleJacobian(p, theta);
    ASSERT_EQ(g.rows(), p.n_muscles);
    ASSERT_EQ(g.cols(), p.n_joints);
    for (int j = 0; j < 2; ++j) {
      Eigen::VectorXd shifted = theta;
      shifted[j] += eps;
      const Eigen::VectorXd fd =
          (MuscleLengths(p, shifted) - MuscleLengths(p, theta)) / eps;
      EXPECT_LT((fd - g.col(j)).cwiseAbs().maxCoeff(), 1e-4);
    }
  }
}

TEST(ElasticTension, NeverNegative) {
  ArmPlant p = ArmPlant::Default();
  for (double d = -0.05; d <= 0.05; d += 0.001) {
    const Eigen::VectorXd f = ElasticTension(p, Eigen::VectorXd::Constant(4, d));
    EXPECT_GE(f.minCoeff(), 0.0);
    if (d <= 0) EXPECT_EQ(f.maxCoeff(), 0.0);
  }
}

// ----- quasi-static solve ----- //

TEST(QuasiStatic, SymmetricAntagonistsStayCentered) {
  ArmPlant p = testing::OneJointPlant(0.02, 1e6);
  p.gravity = 0.0;
  Eigen::VectorXd l = p.rest_lengths.array() - 0.004;
  const Equilibrium eq = QuasiStaticSolve(p, l, Eigen::VectorXd::Zero(1));
  EXPECT_NEAR(eq.theta[0], 0.0, 1e-12);
  EXPECT_NEAR(eq.tension[0], eq.tension[1], 1e-9);
  EXPECT_LT(eq.residual, 1e-6);
}

TEST(QuasiStatic, ShortenedFlexorFlexesLikeBisection) {
  ArmPlant p = testing::OneJointPlant(0.02, 1e6);
  Eigen::Vector2d l = p.rest_lengths.array() - 0.004;
  l[0] -= 0.005;
  const Equilibrium eq = QuasiStaticSolve(p, l, Eigen::VectorXd::Zero(1));
  const double oracle = BisectEquilibrium(p, l);
  EXPECT_GT(eq.theta[0], 0.0);
  EXPECT_NEAR(eq.theta[0], oracle, 1e-8);
}

TEST(QuasiStatic, PayloadSagsAndLoadsFlexor) {
  ArmPlant p = testing::OneJointPlant(0.02, 1e6);
  Eigen::Vector2d l = p.rest_lengths.array() - 0.004;
  const Equilibrium free = QuasiStaticSolve(p, l, Eigen::VectorXd::Zero(1));
  p.payload_mass = 0.5;
  const Equilibrium loaded = QuasiStaticSolve(p, l, Eigen::VectorXd::Zero(1));
  EXPECT_LT(loaded.theta[0], free.theta[0]);
  EXPECT_GT(loaded.tension[0], free.tension[0]);
  EXPECT_NEAR(loaded.theta[0], BisectEquilibrium(p, l), 1e-8);
}

TEST(QuasiStatic, ConvergesFromAnyStartInsideLimits) {
  ArmPlant p = ArmPlant::Default();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> angle(-1.2, 1.2);
  std::uniform_real_distribution<double> slack(0.002, 0.01);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd target(2);
    target << angle(rng), angle(rng);
    Eigen::VectorXd l = MuscleLengths(p, target);
    for (int i = 0; i < 4; ++i) l[i] -= slack(rng);
    Eigen::VectorXd start(2);
    start << angle(rng), angle(rng);
    QuasiStaticOptions opt;
    opt.initial_theta = &start;
    Equilibrium eq;
    try {
      eq = QuasiStaticSolve(p, l, Eigen::VectorXd::Zero(2), opt);
    } catch (const SolverError&) {
      // the equilibrium of this command may lie outside the limits
      continue;
    }
    EXPECT_LT(eq.residual, 1e-6);
    const Eigen::VectorXd torque =
        MuscleTorque(p, eq.theta, eq.tension) + GravityTorque(p, eq.theta);
    EXPECT_LT(torque.norm(), 1e-6);
  }
}

TEST(QuasiStatic, NonConvergenceCarriesResidual) {
  ArmPlant p = ArmPlant::Default();
  Eigen::VectorXd l = p.rest_lengths.array() - 0.005;
  l[0] -= 0.01;
  QuasiStaticOptions opt;
  opt.max_iterations = 1;
  try {
    QuasiStaticSolve(p, l, Eigen::VectorXd::Zero(2), opt);
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_GT(e.residual(), 1e-6);
  }
}

// ----- joint stiffness ----- //

TEST(JointStiffness, SlackMusclesGiveZero) {
  ArmPlant p = ArmPlant::Default();
  const Eigen::MatrixXd k =
      JointStiffness(p, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(4));
  EXPECT_EQ(k.norm(), 0.0);
}

TEST(JointStiffness, CoContractionRaisesEveryEigenvalue) {
  ArmPlant p = ArmPlant::Default();
  Eigen::VectorXd theta(2);
  theta << 0.3, -0.4;
  Eigen::VectorXd prev;
  for (double scale : {1.0, 1.5, 2.0, 3.0}) {
    const Eigen::VectorXd stretch = scale * Eigen::Vector4d(0.002, 0.003, 0.001, 0.004);
    const Eigen::VectorXd f = ElasticTension(p, stretch);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(JointStiffness(p, theta, f));
    if (prev.size()) {
      EXPECT_GE(es.eigenvalues()[0], prev[0]);
      EXPECT_GE(es.eigenvalues()[1], prev[1]);
    }
    prev = es.eigenvalues();
  }
}

TEST(JointStiffness, OneJointClosedFormAndFiniteDifference) {
  ArmPlant p = testing::OneJointPlant(0.02, 1e6);
  p.gravity = 0.0;
  const double r = 0.02, k = 1e6;
  Eigen::Vector2d l = p.rest_lengths.array() - Eigen::Array2d(0.003, 0.005);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(1);
  const Eigen::VectorXd stretch = MuscleStretch(p, theta, l);
  const Eigen::VectorXd f = ElasticTension(p, stretch);
  const double closed = r * r * 2 * k * (stretch[0] + stretch[1]);
  EXPECT_NEAR(JointStiffness(p, theta, f)(0, 0), closed, 1e-9 * closed);
  // minus d(torque)/d(theta)
  const double eps = 1e-7;
  auto torque = [&](double q) {
    Eigen::VectorXd t(1);
    t << q;
    return MuscleTorque(p, t, ElasticTension(p, MuscleStretch(p, t, l)))[0];
  };
  const double fd = -(torque(eps) - torque(-eps)) / (2 * eps);
  EXPECT_NEAR(fd, closed, 1e-5 * closed);
}

TEST(HandKinematics, JacobianMatchesFiniteDifferences) {
  ArmPlant p = ArmPlant::Default();
  Eigen::VectorXd theta(2);
  theta << 0.4, -0.9;
  const Eigen::MatrixXd j = HandJacobian(p, theta);
  for (int c = 0; c < 2; ++c) {
    Eigen::VectorXd a = theta, b = theta;
    a[c] += 1e-6;
    b[c] -= 1e-6;
    const Eigen::Vector2d fd = (HandPosition(p, a) - HandPosition(p, b)) / 2e-6;
    EXPECT_LT((fd - j.col(c)).norm(), 1e-8);
  }
}

TEST(ArmPlant, AddedMuscleAppendsRow) {
  ArmPlant p = ArmPlant::Default();
  Eigen::VectorXd arms(2);
  arms << -kAddedMuscleMomentArm, 0.0;
  const ArmPlant grown = p.WithAddedMuscle(arms, 0.3, 1e6);
  EXPECT_EQ(grown.n_muscles, 5);
  EXPECT_EQ(grown.moment_arms.row(4).transpose(), arms);
  EXPECT_EQ(grown.moment_arms.topRows(4), p.moment_arms);
  EXPECT_NO_THROW(grown.Validate());
}

TEST(ArmPlant, ValidateRejectsBadShapes) {
  ArmPlant p = ArmPlant::Default();
  p.elastic_k.resize(3);
  EXPECT_THROW(p.Validate(), UsageError);
  p = ArmPlant::Default();
  p.elastic_k[0] = 0;
  EXPECT_THROW(p.Validate(), UsageError);
}

// ----- dynamics ----- //

double PendulumPeriod(double length, double dt) {
  ArmPlant p = ArmPlant::Default();
  FlexibleObject obj = FlexibleObject::Pendulum(length, 0.2);
  DynamicState s = RestState(p, obj, Eigen::VectorXd::Zero(2));
  s.q[2] += 0.05;
  const Eigen::VectorXd l = p.rest_lengths;
  StepOptions opt;
  opt.lock_arm = true;
  // time successive upward zero crossings of the swing angle
  const double rest = -M_PI / 2;
  double prev = s.q[2] - rest, first = -1, second = -1;
  while (s.time < 5.0 && second < 0) {
    const double t0 = s.time;
    s = StepDynamics(p, obj, s, l, dt, opt);
    const double now = s.q[2] - rest;
    if (prev < 0 && now >= 0) {
      const double tc = t0 + dt * (-prev) / (now - prev);
      if (first < 0) {
        first = tc;
      } else {
        second = tc;
      }
    }
    prev = now;
  }
  return second - first;
}

TEST(Dynamics, LockedArmPendulumPeriod) {
  for (double length : {0.2, 0.4}) {
    const double expected = 2 * M_PI * std::sqrt(length / 9.81);
    EXPECT_NEAR(PendulumPeriod(length, 1e-4), expected, 2e-3 * expected);
  }
}

TEST(Dynamics, HalvingStepConverges) {
  ArmPlant p = ArmPlant::Default();
  FlexibleObject obj = FlexibleObject::Pendulum(0.3, 0.05, 0.01);
  Eigen::VectorXd l = p.rest_lengths.array() - 0.004;
  l[0] -= 0.006;
  auto run = [&](double dt) {
    DynamicState s = RestState(p, obj, Eigen::VectorXd::Zero(2));
    const int n = static_cast<int>(std::lround(0.5 / dt));
    for (int i = 0; i < n; ++i) s = StepDynamics(p, obj, s, l, dt);
    return s.q;
  };
  const Eigen::VectorXd ref = run(1.25e-5);
  const double e1 = (run(4e-4) - ref).norm();
  const double e2 = (run(2e-4) - ref).norm();
  // first-order scheme
  EXPECT_LT(e2, 0.7 * e1);
  EXPECT_LT(e2, 1e-2);
}

TEST(Dynamics, DampedMotionIsPassive) {
  ArmPlant p = ArmPlant::Default();
  FlexibleObject obj = FlexibleObject::Pendulum(0.2, 0.05, 0.02);
  Eigen::VectorXd l = p.rest_lengths.array() - 0.005;
  l[2] -= 0.004;
  DynamicState s = RestState(p, obj, Eigen::VectorXd::Zero(2));
  s.qd[0] = 2.0;
  double e = MechanicalEnergy(p, obj, s, l);
  const double e0 = e;
  for (int i = 0; i < 20000; ++i) {
    s = StepDynamics(p, obj, s, l, 5e-5);
    const double next = MechanicalEnergy(p, obj, s, l);
    // allow integration noise relative to the initial scale
    EXPECT_LE(next, e + 1e-6 * std::abs(e0)) << "step " << i;
    e = next;
  }
  EXPECT_LT(e, e0);
}

TEST(Dynamics, SettlesAtQuasiStaticEquilibrium) {
  ArmPlant p = ArmPlant::Default();
  p.damping *= 5;
  Eigen::VectorXd l = p.rest_lengths.array() - 0.004;
  l[0] -= 0.004;
  l[3] -= 0.003;
  const Equilibrium eq = QuasiStaticSolve(p, l, Eigen::VectorXd::Zero(2));
  DynamicState s = RestState(p, FlexibleObject::None(), Eigen::VectorXd::Zero(2));
  for (int i = 0; i < 40000; ++i) {
    s = StepDynamics(p, FlexibleObject::None(), s, l, 1e-4);
  }
  EXPECT_LT((s.q - eq.theta).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_LT((StateTensions(p, s, l) - eq.tension).cwiseAbs().maxCoeff(), 0.05);
}

TEST(Dynamics, RejectsBadStep) {
  ArmPlant p = ArmPlant::Default();
  DynamicState s = RestState(p, FlexibleObject::None(), Eigen::VectorXd::Zero(2));
  EXPECT_ANY_THROW(StepDynamics(p, FlexibleObject::None(), s, p.rest_lengths, 0.0));
  EXPECT_ANY_THROW(StepDynamics(p, FlexibleObject::None(), s, p.rest_lengths, 0.5));
}

TEST(Dynamics, NonFiniteStateIsIntegrationError) {
  ArmPlant p = ArmPlant::Default();
  DynamicState s = RestState(p, FlexibleObject::None(), Eigen::VectorXd::Zero(2));
  s.qd[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(StepDynamics(p, FlexibleObject::None(), s, p.rest_lengths, 1e-3),
               IntegrationError);
}

// ----- thermal ----- //

// Exact response of the linear two-node model by eigendecomposition.
Temperatures ThermalExact(const ThermalPlant& p, const Temperatures& t0,
                          double current, double time) {
  Eigen::Matrix2d a;
  a << -p.core_housing_conductance / p.core_capacity,
      p.core_housing_conductance / p.core_capacity,
      p.core_housing_conductance / p.housing_capacity,
      -(p.core_housing_conductance + p.housing_ambient_conductance) /
          p.housing_capacity;
  const Eigen::Vector2d b(
      p.winding_resistance * current * current / p.core_capacity,
      p.housing_ambient_conductance * p.ambient / p.housing_capacity);
  const Eigen::Vector2d xs = -a.inverse() * b;
  Eigen::EigenSolver<Eigen::Matrix2d> es(a);
  const Eigen::Matrix2d v = es.eigenvectors().real();
  const Eigen::Vector2d lam = es.eigenvalues().real();
  const Eigen::Vector2d c = v.inverse() * (Eigen::Vector2d(t0.core, t0.housing) - xs);
  const Eigen::Vector2d x =
      xs + v * (c.array() * (lam.array() * time).exp()).matrix();
  return {x[0], x[1]};
}

TEST(Thermal, SteadyStateClosedForm) {
  ThermalPlant p;
  const auto ss = p.SteadyState(2.0);
  const double heat = 4.0 * p.winding_resistance;
  EXPECT_NEAR(ss[1], p.ambient + heat / p.housing_ambient_conductance, 1e-9);
  EXPECT_NEAR(ss[0], ss[1] + heat / p.core_housing_conductance, 1e-9);
}

TEST(Thermal, EulerMatchesExactSolution) {
  ThermalPlant p;
  Temperatures t{30.0, 27.0};
  const double dt = 0.01;
  for (int i = 0; i < 60000; ++i) t = ThermalStep(p, t, 1.5, dt);
  const Temperatures exact = ThermalExact(p, {30.0, 27.0}, 1.5, 600.0);
  EXPECT_NEAR(t.core, exact.core, 0.01);
  EXPECT_NEAR(t.housing, exact.housing, 0.01);
}

TEST(Thermal, SuperpositionInHeatInput) {
  ThermalPlant p;
  const Temperatures amb{p.ambient, p.ambient};
  auto rise = [&](double i) {
    Temperatures t = amb;
    for (int k = 0; k < 3000; ++k) t = ThermalStep(p, t, i, 0.1);
    return Eigen::Vector2d(t.core - p.ambient, t.housing - p.ambient);
  };
  // heat is I^2 R: the rise is linear in I^2
  const Eigen::Vector2d a = rise(1.0), b = rise(std::sqrt(2.0)), c = rise(std::sqrt(3.0));
  EXPECT_LT((a + b - c).norm(), 1e-9);
}

TEST(Thermal, ConvergesToSteadyState) {
  ThermalPlant p;
  Temperatures t{p.ambient, p.ambient};
  for (int k = 0; k < 100000; ++k) t = ThermalStep(p, t, 1.0, 1.0);
  const auto ss = p.SteadyState(1.0);
  EXPECT_NEAR(t.core, ss[0], 1e-6);
  EXPECT_NEAR(t.housing, ss[1], 1e-6);
}

}  // namespace
}  // namespace muskwheel
