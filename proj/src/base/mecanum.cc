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

#include "muskwheel/base/mecanum.h"

#include <cmath>
#include <numbers>

#include "muskwheel/core/errors.h"

namespace muskwheel {

void BaseGeometry::Validate() const {
  if (!(a > 0.0 && b > 0.0 && wheel_radius > 0.0)) {
    throw UsageError("base geometry a, b and wheel_radius must be > 0");
  }
}

Eigen::Matrix<double, 4, 3> AllocationMatrix(const BaseGeometry& geom) {
  const double ab = geom.a + geom.b;
  Eigen::Matrix<double, 4, 3> r;
  r << 1.0, 1.0, ab,  //
      1.0, -1.0, -ab,  //
      1.0, 1.0, -ab,   //
      1.0, -1.0, ab;
  return r;
}

Eigen::Matrix<double, 3, 4> AllocationPseudoInverse(const BaseGeometry& geom) {
  // R^T R = diag(4, 4, 4 (a+b)^2)
  const double ab = geom.a + geom.b;
  Eigen::Matrix<double, 3, 4> pinv = AllocationMatrix(geom).transpose();
  pinv.row(0) /= 4.0;
  pinv.row(1) /= 4.0;
  pinv.row(2) /= 4.0 * ab * ab;
  return pinv;
}

WheelSpeeds WheelNullSpace() { return WheelSpeeds(0.5, 0.5, -0.5, -0.5); }

WheelSpeeds WheelSpeedsFromTwist(const BaseGeometry& geom, const Twist& xdot) {
  return AllocationMatrix(geom) * xdot;
}

WheelSpeeds WheelAngularSpeeds(const BaseGeometry& geom, const WheelSpeeds& v) {
  return v / geom.wheel_radius;
}

double WrapAngle(double angle) {
  constexpr double kPi = std::numbers::pi;
  double a = std::fmod(angle + kPi, 2.0 * kPi);
  if (a <= 0.0) a += 2.0 * kPi;
  return a - kPi;
}

BasePose OdometryStep(const BaseGeometry& geom, const BasePose& pose,
                      const WheelSpeeds& v_wheel, double dt) {
  if (!(dt > 0.0)) throw UsageError("odometry dt must be > 0");
  const Eigen::Vector3d d = AllocationPseudoInverse(geom) * v_wheel * dt;
  const double heading = pose.psi + 0.5 * d[2];
  const double c = std::cos(heading), s = std::sin(heading);
  BasePose next;
  next.x = pose.x + c * d[0] - s * d[1];
  next.y = pose.y + s * d[0] + c * d[1];
  next.psi = WrapAngle(pose.psi + d[2]);
  next.timestamp = pose.timestamp + dt;
  return next;
}

}  // namespace muskwheel
