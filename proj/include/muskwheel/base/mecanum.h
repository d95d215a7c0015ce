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

#ifndef MUSKWHEEL_BASE_MECANUM_H_
#define MUSKWHEEL_BASE_MECANUM_H_

#include <Eigen/Core>

namespace muskwheel {

// Wheel layout: wheels are 2a apart across the track (y) and 2b apart along
// the wheelbase (x).
struct BaseGeometry {
  double a = 0.25;              // m, half track width
  double b = 0.30;              // m, half wheelbase
  double wheel_radius = 0.1015; // m

  void Validate() const;
};

struct BasePose {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;  // rad, wrapped to (-pi, pi]
  double timestamp = 0.0;
};

using Twist = Eigen::Vector3d;        // (xdot, ydot, psidot), body frame
using WheelSpeeds = Eigen::Vector4d;  // linear rim speeds, m/s

// Allocation matrix R with v_wheel = R xdot.
Eigen::Matrix<double, 4, 3> AllocationMatrix(const BaseGeometry& geom);

// Closed-form Moore-Penrose pseudo-inverse of R, (R^T R)^-1 R^T.
Eigen::Matrix<double, 3, 4> AllocationPseudoInverse(const BaseGeometry& geom);

// Unit vector spanning the wheel-speed null space of R^+.
WheelSpeeds WheelNullSpace();

WheelSpeeds WheelSpeedsFromTwist(const BaseGeometry& geom, const Twist& xdot);

// Motor angular speeds (rad/s) for linear rim speeds.
WheelSpeeds WheelAngularSpeeds(const BaseGeometry& geom, const WheelSpeeds& v);

double WrapAngle(double angle);

// Integrates R^+ v_wheel dt in the body frame and rotates it into the world
// with the midpoint heading. dt > 0.
BasePose OdometryStep(const BaseGeometry& geom, const BasePose& pose,
                      const WheelSpeeds& v_wheel, double dt);

}  // namespace muskwheel

#endif  // MUSKWHEEL_BASE_MECANUM_H_
