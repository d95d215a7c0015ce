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

#ifndef MUSKWHEEL_BASE_WAYPOINT_FOLLOWER_H_
#define MUSKWHEEL_BASE_WAYPOINT_FOLLOWER_H_

#include <functional>
#include <optional>
#include <vector>

#include "muskwheel/base/mecanum.h"
#include "muskwheel/core/errors.h"

namespace muskwheel {

struct Waypoint {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;
};

struct FollowerOptions {
  double v_max = 0.5;        // m/s
  double omega_max = 1.0;    // rad/s
  double gain_position = 2.0;  // 1/s
  double gain_heading = 2.0;   // 1/s
  double position_tol = 0.02;  // m
  double heading_tol = 0.05;   // rad
  double timeout = 60.0;       // s of pose-stream time
};

class NavigationError : public Error {
 public:
  NavigationError(const std::string& what, const BasePose& last)
      : Error(what), last_pose_(last) {}
  const BasePose& last_pose() const { return last_pose_; }

 private:
  BasePose last_pose_;
};

// Proportional waypoint tracker. Feed poses in, get body-frame twists out;
// returns nullopt once the final waypoint is reached.
class WaypointFollower {
 public:
  WaypointFollower(std::vector<Waypoint> waypoints, FollowerOptions options = {});

  // Throws NavigationError when pose.timestamp exceeds the timeout measured
  // from the first pose.
  std::optional<Twist> Update(const BasePose& pose);

  bool done() const { return done_; }
  size_t current_index() const { return index_; }

 private:
  std::vector<Waypoint> waypoints_;
  FollowerOptions options_;
  size_t index_ = 0;
  bool done_ = false;
  std::optional<double> start_time_;
};

// Closed-loop run against a kinematic base: `plant` maps commanded wheel
// speeds to the speeds actually realized (e.g. with slip noise). Odometry of
// the realized speeds is fed back. Returns the final pose.
BasePose FollowWaypoints(
    const BaseGeometry& geom, const BasePose& start,
    const std::vector<Waypoint>& waypoints, const FollowerOptions& options,
    double dt, const std::function<WheelSpeeds(const WheelSpeeds&)>& plant,
    std::vector<Twist>* commands = nullptr);

}  // namespace muskwheel

#endif  // MUSKWHEEL_BASE_WAYPOINT_FOLLOWER_H_
