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
#include <vector>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "gtest/gtest.h"
#include "muskwheel/base/mecanum.h"
#include "muskwheel/base/waypoint_follower.h"

namespace muskwheel {
namespace {

// ----- allocation ----- //

TEST(Mecanum, UnitTwistsGiveColumnsOfR) {
  BaseGeometry g;
  g.a = 0.2;
  g.b = 0.3;
  EXPECT_EQ(WheelSpeedsFromTwist(g, Twist(1, 0, 0)), WheelSpeeds(1, 1, 1, 1));
  EXPECT_EQ(WheelSpeedsFromTwist(g, Twist(0, 1, 0)), WheelSpeeds(1, -1, 1, -1));
  EXPECT_EQ(WheelSpeedsFromTwist(g, Twist(0, 0, 1)),
            WheelSpeeds(0.5, -0.5, -0.5, 0.5));
}

TEST(Mecanum, PseudoInverseMatchesSvd) {
  BaseGeometry g;
  const Eigen::Matrix<double, 4, 3> r = AllocationMatrix(g);
  const Eigen::MatrixXd oracle =
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(r).pseudoInverse();
  EXPECT_LT((AllocationPseudoInverse(g) - oracle).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((AllocationPseudoInverse(g) * r - Eigen::Matrix3d::Identity())
                .cwiseAbs()
                .maxCoeff(),
            1e-12);
}

TEST(Mecanum, NullSpaceIsInvisibleToOdometry) {
  BaseGeometry g;
  const WheelSpeeds n = WheelNullSpace();
  EXPECT_NEAR(n.norm(), 1.0, 1e-12);
  EXPECT_LT((AllocationPseudoInverse(g) * n).norm(), 1e-12);
  // the null direction is orthogonal to every column of R
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(AllocationMatrix(g).transpose(),
                                        Eigen::ComputeFullV);
  const Eigen::Vector4d oracle = svd.matrixV().col(3);
  EXPECT_NEAR(std::abs(oracle.dot(n)), 1.0, 1e-12);

  const BasePose a = OdometryStep(g, {}, WheelSpeeds(1, 1, 1, 1), 0.1);
  const BasePose b = OdometryStep(g, {}, WheelSpeeds(1, 1, 1, 1) + 0.7 * n, 0.1);
  EXPECT_NEAR(a.x, b.x, 1e-12);
  EXPECT_NEAR(a.y, b.y, 1e-12);
  EXPECT_NEAR(a.psi, b.psi, 1e-12);
}

TEST(Mecanum, AngularSpeedDividesByRadius) {
  BaseGeometry g;
  const WheelSpeeds w = WheelAngularSpeeds(g, WheelSpeeds(0.1015, 0, -0.203, 1));
  EXPECT_NEAR(w[0], 1.0, 1e-12);
  EXPECT_NEAR(w[2], -2.0, 1e-12);
}

TEST(Mecanum, InvalidGeometry) {
  BaseGeometry g;
  g.wheel_radius = 0;
  EXPECT_ANY_THROW(g.Validate());
}

// ----- odometry ----- //

TEST(Odometry, ForwardRoundTrip) {
  BaseGeometry g;
  const BasePose p = OdometryStep(g, {}, WheelSpeedsFromTwist(g, Twist(1, 0, 0)), 1.0);
  EXPECT_NEAR(p.x, 1.0, 1e-12);
  EXPECT_NEAR(p.y, 0.0, 1e-12);
  EXPECT_NEAR(p.psi, 0.0, 1e-12);
  EXPECT_NEAR(p.timestamp, 1.0, 1e-12);
}

TEST(Odometry, BodyFrameRotatedByHeading) {
  BaseGeometry g;
  BasePose start;
  start.psi = M_PI / 2;
  const BasePose p = OdometryStep(g, start, WheelSpeedsFromTwist(g, Twist(1, 0, 0)), 0.5);
  EXPECT_NEAR(p.x, 0.0, 1e-12);
  EXPECT_NEAR(p.y, 0.5, 1e-12);
}

TEST(Odometry, ConstantTwistTracesCircle) {
  BaseGeometry g;
  // v = 1 m/s, w = 1 rad/s: a unit circle, back to the start after 2 pi s
  BasePose p;
  const int n = 20000;
  const double dt = 2 * M_PI / n;
  const WheelSpeeds v = WheelSpeedsFromTwist(g, Twist(1, 0, 1));
  double max_radius_err = 0;
  for (int i = 0; i < n; ++i) {
    p = OdometryStep(g, p, v, dt);
    max_radius_err = std::max(max_radius_err, std::abs(std::hypot(p.x, p.y - 1) - 1));
  }
  EXPECT_LT(max_radius_err, 1e-6);
  EXPECT_LT(std::hypot(p.x, p.y), 1e-6);
}

TEST(Odometry, HeadingStaysWrapped) {
  BaseGeometry g;
  BasePose p;
  const WheelSpeeds v = WheelSpeedsFromTwist(g, Twist(0, 0, 3));
  for (int i = 0; i < 1000; ++i) {
    p = OdometryStep(g, p, v, 0.01);
    ASSERT_GT(p.psi, -M_PI);
    ASSERT_LE(p.psi, M_PI);
  }
  EXPECT_NEAR(WrapAngle(M_PI), M_PI, 1e-15);
  EXPECT_NEAR(WrapAngle(-M_PI), M_PI, 1e-15);
}

TEST(Odometry, OpenLoopSquareReturnsToStart) {
  BaseGeometry g;
  BasePose p;
  const double dt = 0.01;
  auto drive = [&](const Twist& t, int steps) {
    for (int i = 0; i < steps; ++i) p = OdometryStep(g, p, WheelSpeedsFromTwist(g, t), dt);
  };
  for (int leg = 0; leg < 4; ++leg) {
    drive(Twist(0.5, 0, 0), 200);
    drive(Twist(0, 0, M_PI / 2), 100);
  }
  EXPECT_NEAR(p.x, 0.0, 1e-9);
  EXPECT_NEAR(p.y, 0.0, 1e-9);
  EXPECT_NEAR(WrapAngle(p.psi), 0.0, 1e-9);
}

// ----- waypoint following ----- //

WheelSpeeds Ideal(const WheelSpeeds& v) { return v; }

TEST(WaypointFollower, StartAtGoalTerminatesImmediately) {
  BaseGeometry g;
  std::vector<Twist> commands;
  const BasePose end = FollowWaypoints(g, {}, {{0, 0, 0}}, {}, 0.02, Ideal, &commands);
  ASSERT_EQ(commands.size(), 1u);
  EXPECT_EQ(commands[0], Twist::Zero());
  EXPECT_EQ(end.timestamp, 0.0);
}

TEST(WaypointFollower, ReachesPointAhead) {
  BaseGeometry g;
  const BasePose end = FollowWaypoints(g, {}, {{1, 0, 0}}, {}, 0.02, Ideal);
  EXPECT_LT(std::hypot(end.x - 1, end.y), 0.02);
  EXPECT_LT(end.timestamp, 10.0);
}

TEST(WaypointFollower, CommandsAreClipped) {
  BaseGeometry g;
  FollowerOptions opt;
  std::vector<Twist> commands;
  FollowWaypoints(g, {}, {{3, -2, 2.5}}, opt, 0.02, Ideal, &commands);
  for (const Twist& t : commands) {
    EXPECT_LE(t.head<2>().norm(), opt.v_max + 1e-12);
    EXPECT_LE(std::abs(t[2]), opt.omega_max + 1e-12);
  }
}

TEST(WaypointFollower, TimeoutCarriesLastPose) {
  BaseGeometry g;
  FollowerOptions opt;
  opt.timeout = 1.0;
  try {
    FollowWaypoints(g, {}, {{10, 0, 0}}, opt, 0.02, Ideal);
    FAIL() << "expected NavigationError";
  } catch (const NavigationError& e) {
    EXPECT_GT(e.last_pose().x, 0.0);
    EXPECT_GT(e.last_pose().timestamp, 1.0);
  }
}

TEST(WaypointFollower, EmptyListIsUsageError) {
  EXPECT_THROW(WaypointFollower({}), UsageError);
}

TEST(WaypointFollower, NoisyWheelsStillConverge) {
  BaseGeometry g;
  int successes = 0;
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> slip(0.0, 0.01);
    auto noisy = [&](const WheelSpeeds& v) {
      WheelSpeeds out = v;
      for (int i = 0; i < 4; ++i) out[i] *= 1.0 + slip(rng);
      return out;
    };
    try {
      const BasePose end = FollowWaypoints(g, {}, {{1, 0.5, 0.3}}, {}, 0.02, noisy);
      if (std::hypot(end.x - 1, end.y - 0.5) < 0.02 &&
          std::abs(WrapAngle(end.psi - 0.3)) < 0.05) {
        ++successes;
      }
    } catch (const NavigationError&) {
    }
  }
  EXPECT_GE(successes, 99);
}

}  // namespace
}  // namespace muskwheel
