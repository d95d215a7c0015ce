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


#ifndef MUSKWHEEL_HARNESS_TELEOP_H_
#define MUSKWHEEL_HARNESS_TELEOP_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "muskwheel/base/mecanum.h"
#include "muskwheel/plant/arm_plant.h"

namespace muskwheel {

inline constexpr int kProtocolVersion = 1;
inline constexpr int kDemonstrationVersion = 1;

// ----- wire protocol ----- //

struct TeleopCommand {
  Eigen::Vector3d twist = Eigen::Vector3d::Zero();     // body vx, vy, wz
  Eigen::Vector2d ee_delta = Eigen::Vector2d::Zero();  // m, hand target
  double lift = 0.0;  // m, lift displacement
  int grip = 0;       // 1 closed
  int64_t seq = 0;
};

struct HelloMessage {
  int ver = 0;
};

struct RecordMessage {
  bool on = false;
};

using ClientMessage = std::variant<HelloMessage, TeleopCommand, RecordMessage>;

// Parses one client text frame. Throws FormatError for malformed JSON,
// frames containing a newline, unknown types and missing or extra fields.
ClientMessage ParseClientMessage(std::string_view text);

std::string CommandFrame(const TeleopCommand& cmd);
std::string HelloFrame(int ver = kProtocolVersion);
std::string RecordFrame(bool on);
std::string ErrorFrame(const std::string& msg);

// ----- session ----- //

struct TeleopOptions {
  ArmPlant arm = ArmPlant::Default();
  BaseGeometry base;
  double control_dt = 0.02;     // s, 50 Hz
  double state_period = 0.05;   // s, 20 Hz
  double command_timeout = 0.5; // s without commands -> zero twist, hold
  double k_ref = 2.0;           // N m/rad, arm stiffness while teaching
  Eigen::Vector2d theta0{0.3, 0.6};
  double lift_max = 0.5;        // m
  double max_ee_step = 0.01;    // m per tick
};

struct TeleopState {
  double t = 0.0;
  BasePose pose;
  Eigen::VectorXd theta;     // plant posture
  Eigen::VectorXd theta_ref; // commanded posture
  Eigen::VectorXd f;         // N
  Eigen::Vector2d tip = Eigen::Vector2d::Zero();  // hand, arm plane
  double lift = 0.0;
  int grip = 0;
};

std::string StateFrame(const TeleopState& s);

// One control tick of a recording: the command in effect (after
// latest-wins and the safety rules) and the state it produced.
struct DemoRecord {
  TeleopCommand cmd;
  TeleopState state;
};

struct Demonstration {
  TeleopOptions options;
  TeleopState start;
  std::vector<DemoRecord> records;
};

// Simulated robot behind the teleop channel: mecanum base, planar arm
// held by posture/stiffness commands, a lift and a gripper. All times are
// simulated; a server maps wall-clock ticks onto Tick().
class TeleopSession {
 public:
  explicit TeleopSession(const TeleopOptions& options = {});

  // Latest command wins: a newer seq replaces any command still pending
  // for the next tick, an older or repeated seq is dropped (returns false).
  bool Submit(const TeleopCommand& cmd);
  // Client gone: the next tick runs with zero twist and holds the arm.
  void Disconnect();
  void SetRecording(bool on);
  bool recording() const { return recording_; }

  // Advances one control period; returns true when a state frame is due.
  bool Tick();
  // Tick with a given effective command, bypassing the pending slot and
  // the safety rules (used by replay).
  void Apply(const TeleopCommand& cmd);

  const TeleopState& state() const { return state_; }
  const TeleopOptions& options() const { return options_; }
  const TeleopCommand& effective() const { return effective_; }
  // The recording in progress, or the last finished one.
  const Demonstration& demonstration() const { return demo_; }

  // Restores a recorded state (start of a replay).
  void Restore(const TeleopState& s);

 private:
  void Step(const TeleopCommand& cmd);
  void Settle();

  TeleopOptions options_;
  TeleopState state_;
  Eigen::VectorXd l_ref_;
  Eigen::Vector2d hand_target_;
  double next_frame_ = 0.0;
  std::optional<TeleopCommand> pending_;
  TeleopCommand effective_;
  int64_t last_seq_ = -1;
  double last_command_time_ = -1e9;
  bool disconnected_ = true;
  bool recording_ = false;
  int64_t ticks_ = 0;
  Demonstration demo_;
};

// ----- demonstrations ----- //

// JSON lines: a header {"type":"demo","ver":1,...} then one record per
// tick. Doubles round-trip exactly.
void WriteDemonstration(const Demonstration& demo, std::ostream& out);
void SaveDemonstration(const Demonstration& demo, const std::string& path);
// Throws FormatError on a version mismatch, a bad record or a truncated
// file; the message names the byte offset of the offending record.
Demonstration ReadDemonstration(std::istream& in);
Demonstration LoadDemonstration(const std::string& path);

struct ReplayOptions {
  // Wall-clock pacing: 0 runs as fast as possible, s > 0 plays at s times
  // real time. Simulated time and results do not depend on it.
  double speed = 0.0;
};

struct ReplayResult {
  TeleopState final_state;
  double theta_error = 0.0;  // rad, max |theta - recorded|
  double pose_error = 0.0;   // m, final base position
  double wall_seconds = 0.0;
  int ticks = 0;
};

// Re-executes the recorded commands open loop on a fresh session started
// from the recorded start state.
ReplayResult Replay(const Demonstration& demo, const ReplayOptions& options = {});

}  // namespace muskwheel

#endif  // MUSKWHEEL_HARNESS_TELEOP_H_
