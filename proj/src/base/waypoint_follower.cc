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

#include "muskwheel/base/waypoint_follower.h"

#include <algorithm>
#include <cmath>
#include <utility>

namespace muskwheel {

WaypointFollower::WaypointFollower(std::vector<Waypoint> waypoints,
                                   FollowerOptions options)
    : waypoints_(std::move(waypoints)), options_(options) {
  if (waypoints_.empty()) throw UsageError("waypoint list is empty");
}

std::optional<Twist> WaypointFollower::Update(const BasePose& pose) {
  if (done_) return std::nullopt;
  if (!start_time_) start_time_ = pose.timestamp;
  if (pose.timestamp - *start_time_ > options_.timeout) {
    throw NavigationError("waypoint following timed out", pose);
  }
  // skip every waypoint already reached
  while (true) {
    const Waypoint& w = waypoints_[index_];
    const double dist = std::hypot(w.x - pose.x, w.y - pose.y);
    const bool last = index_ + 1 == waypoints_.size();
    const double heading_err = WrapAngle(w.psi - pose.psi);
    if (last) {
      if (dist < options_.position_tol &&
          std::abs(heading_err) < options_.heading_tol) {
        done_ = true;
        return std::nullopt;
      }
      break;
    }
    if (dist < options_.position_tol) {
      ++index_;
      continue;
    }
    break;
  }
  const Waypoint& w = waypoints_[index_];
  // world-frame velocity toward the waypoint, clipped in magnitude
  Eigen::Vector2d v(options_.gain_position * (w.x - pose.x),
                    options_.gain_position * (w.y - pose.y));
  if (v.norm() > options_.v_max) v *= options_.v_max / v.norm();
  double omega = options_.gain_heading * WrapAngle(w.psi - pose.psi);
  omega = std::clamp(omega, -options_.omega_max, options_.omega_max);
  const double c = std::cos(pose.psi), s = std::sin(pose.psi);
  return Twist(c * v.x() + s * v.y(), -s * v.x() + c * v.y(), omega);
}

BasePose FollowWaypoints(
    const BaseGeometry& geom, const BasePose& start,
    const std::vector<Waypoint>& waypoints, const FollowerOptions& options,
    double dt, const std::function<WheelSpeeds(const WheelSpeeds&)>& plant,
    std::vector<Twist>* commands) {
  WaypointFollower follower(waypoints, options);
  BasePose pose = start;
  while (auto twist = follower.Update(pose)) {
    if (commands) commands->push_back(*twist);
    const WheelSpeeds actual = plant(WheelSpeedsFromTwist(geom, *twist));
    pose = OdometryStep(geom, pose, actual, dt);
  }
  if (commands) commands->push_back(Twist::Zero());
  return pose;
}

}  // namespace muskwheel
