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


#include "muskwheel/harness/teleop.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>
#include <utility>

#include <Eigen/Dense>

#include "muskwheel/control/stiffness_command.h"
#include "muskwheel/core/errors.h"
#include "muskwheel/plant/plant_config.h"

namespace muskwheel {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// ----- json helpers ----- //

[[noreturn]] void Malformed(const std::string& what) {
  throw FormatError("malformed message: " + what);
}

void ExactKeys(const json& j, std::initializer_list<const char*> keys) {
  std::set<std::string> want(keys.begin(), keys.end());
  for (const auto& [key, value] : j.items()) {
    if (!want.count(key)) Malformed("unexpected field '" + key + "'");
  }
  for (const auto& key : want) {
    if (!j.contains(key)) Malformed("missing field '" + key + "'");
  }
}

double Number(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number()) Malformed(std::string(key) + " must be a number");
  double x = v.get<double>();
  if (!std::isfinite(x)) Malformed(std::string(key) + " must be finite");
  return x;
}

Eigen::VectorXd Numbers(const json& j, const char* key, int size) {
  const json& v = j.at(key);
  if (!v.is_array() || (size >= 0 && static_cast<int>(v.size()) != size)) {
    Malformed(std::string(key) + " must be an array of " +
              std::to_string(size) + " numbers");
  }
  Eigen::VectorXd x(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) Malformed(std::string(key) + " must hold numbers");
    x[i] = v[i].get<double>();
    if (!std::isfinite(x[i])) Malformed(std::string(key) + " must be finite");
  }
  return x;
}

std::vector<double> Array(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

ordered_json CommandJson(const TeleopCommand& c) {
  ordered_json j;
  j["twist"] = Array(c.twist);
  j["ee_delta"] = Array(c.ee_delta);
  j["lift"] = c.lift;
  j["grip"] = c.grip;
  j["seq"] = c.seq;
  return j;
}

TeleopCommand CommandFromJson(const json& j) {
  TeleopCommand c;
  c.twist = Numbers(j, "twist", 3);
  c.ee_delta = Numbers(j, "ee_delta", 2);
  c.lift = Number(j, "lift");
  const json& grip = j.at("grip");
  if (!grip.is_number_integer() || (grip != 0 && grip != 1)) {
    Malformed("grip must be 0 or 1");
  }
  c.grip = grip.get<int>();
  const json& seq = j.at("seq");
  if (!seq.is_number_integer() || seq.get<int64_t>() < 0) {
    Malformed("seq must be a non-negative integer");
  }
  c.seq = seq.get<int64_t>();
  return c;
}

ordered_json StateJson(const TeleopState& s) {
  ordered_json j;
  j["t"] = s.t;
  j["pose"] = {s.pose.x, s.pose.y, s.pose.psi};
  j["theta"] = Array(s.theta);
  j["theta_ref"] = Array(s.theta_ref);
  j["f"] = Array(s.f);
  j["tip"] = Array(s.tip);
  j["lift"] = s.lift;
  j["grip"] = s.grip;
  return j;
}

TeleopState StateFromJson(const json& j, int n_joints, int n_muscles) {
  ExactKeys(j, {"t", "pose", "theta", "theta_ref", "f", "tip", "lift", "grip"});
  TeleopState s;
  s.t = Number(j, "t");
  Eigen::VectorXd pose = Numbers(j, "pose", 3);
  s.pose = {pose[0], pose[1], pose[2], s.t};
  s.theta = Numbers(j, "theta", n_joints);
  s.theta_ref = Numbers(j, "theta_ref", n_joints);
  s.f = Numbers(j, "f", n_muscles);
  s.tip = Numbers(j, "tip", 2);
  s.lift = Number(j, "lift");
  if (!j.at("grip").is_number_integer()) Malformed("grip must be an integer");
  s.grip = j.at("grip").get<int>();
  return s;
}

// Damped least squares on the hand position, clamped to the joint limits.
Eigen::VectorXd HandIk(const ArmPlant& arm, const Eigen::Vector2d& target,
                       Eigen::VectorXd theta) {
  for (int it = 0; it < 50; ++it) {
    Eigen::Vector2d e = target - HandPosition(arm, theta);
    if (e.norm() < 1e-12) break;
    Eigen::MatrixXd jac = HandJacobian(arm, theta);
    Eigen::Matrix2d a = jac * jac.transpose() + 1e-4 * Eigen::Matrix2d::Identity();
    theta += jac.transpose() * a.ldlt().solve(e);
    theta = theta.cwiseMax(arm.joint_lower).cwiseMin(arm.joint_upper);
  }
  return theta;
}

}  // namespace

// ----- protocol ----- //

ClientMessage ParseClientMessage(std::string_view text) {
  if (text.find('\n') != std::string_view::npos ||
      text.find('\r') != std::string_view::npos) {
    Malformed("frames must not contain newlines");
  }
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) Malformed("not JSON");
  if (!j.is_object()) Malformed("not a JSON object");
  if (!j.contains("type") || !j["type"].is_string()) Malformed("missing type");
  const std::string type = j["type"];
  if (type == "hello") {
    ExactKeys(j, {"type", "ver"});
    if (!j["ver"].is_number_integer()) Malformed("ver must be an integer");
    return HelloMessage{j["ver"].get<int>()};
  }
  if (type == "cmd") {
    ExactKeys(j, {"type", "twist", "ee_delta", "lift", "grip", "seq"});
    return CommandFromJson(j);
  }
  if (type == "record") {
    ExactKeys(j, {"type", "on"});
    if (!j["on"].is_boolean()) Malformed("on must be a boolean");
    return RecordMessage{j["on"].get<bool>()};
  }
  Malformed("unknown type '" + type + "'");
}

std::string CommandFrame(const TeleopCommand& cmd) {
  ordered_json j;
  j["type"] = "cmd";
  j.update(CommandJson(cmd));
  return j.dump();
}

std::string HelloFrame(int ver) {
  return ordered_json{{"type", "hello"}, {"ver", ver}}.dump();
}

std::string RecordFrame(bool on) {
  return ordered_json{{"type", "record"}, {"on", on}}.dump();
}

std::string ErrorFrame(const std::string& msg) {
  // replace invalid UTF-8 rather than throwing from the error path
  return ordered_json{{"type", "err"}, {"msg", msg}}.dump(
      -1, ' ', false, ordered_json::error_handler_t::replace);
}

std::string StateFrame(const TeleopState& s) {
  ordered_json j;
  j["type"] = "state";
  j["pose"] = {s.pose.x, s.pose.y, s.pose.psi};
  j["theta"] = Array(s.theta);
  j["f"] = Array(s.f);
  j["tip"] = Array(s.tip);
  j["t"] = s.t;
  return j.dump();
}

// ----- session ----- //

TeleopSession::TeleopSession(const TeleopOptions& options) : options_(options) {
  options_.arm.Validate();
  options_.base.Validate();
  if (!(options_.control_dt > 0.0) || !(options_.state_period > 0.0) ||
      !(options_.command_timeout > 0.0) || !(options_.lift_max >= 0.0) ||
      !(options_.max_ee_step > 0.0)) {
    throw UsageError("TeleopSession: bad timing or limit options");
  }
  if (options_.arm.n_joints != 2) {
    throw UsageError("TeleopSession: planar hand control needs 2 joints");
  }
  TeleopState s;
  s.theta_ref = options_.theta0.cwiseMax(options_.arm.joint_lower)
                    .cwiseMin(options_.arm.joint_upper);
  s.theta = s.theta_ref;
  Restore(s);
}

void TeleopSession::Restore(const TeleopState& s) {
  state_ = s;
  state_.pose.timestamp = s.t;
  l_ref_ = CommandForStiffness(options_.arm, state_.theta_ref, options_.k_ref).l_ref;
  if (state_.f.size() != options_.arm.n_muscles) Settle();
  state_.tip = HandPosition(options_.arm, state_.theta);
  hand_target_ = HandPosition(options_.arm, state_.theta_ref);
  pending_.reset();
  effective_ = TeleopCommand{};
  next_frame_ = state_.t + options_.state_period;
}

bool TeleopSession::Submit(const TeleopCommand& cmd) {
  if (cmd.seq <= last_seq_) return false;
  last_seq_ = cmd.seq;
  pending_ = cmd;
  last_command_time_ = state_.t;
  disconnected_ = false;
  return true;
}

void TeleopSession::Disconnect() {
  disconnected_ = true;
  pending_.reset();
}

void TeleopSession::SetRecording(bool on) {
  if (on == recording_) return;
  recording_ = on;
  if (on) demo_ = Demonstration{options_, state_, {}};
}

bool TeleopSession::Tick() {
  TeleopCommand cmd = effective_;
  cmd.ee_delta.setZero();
  cmd.lift = 0.0;
  if (pending_) {
    cmd = *pending_;
    pending_.reset();
  }
  if (disconnected_ ||
      state_.t - last_command_time_ > options_.command_timeout + 1e-9) {
    // safety stop: zero twist, arm holds its commanded lengths
    cmd.twist.setZero();
    cmd.ee_delta.setZero();
    cmd.lift = 0.0;
  }
  Apply(cmd);
  if (state_.t >= next_frame_ - 1e-9) {
    next_frame_ += options_.state_period;
    return true;
  }
  return false;
}

void TeleopSession::Apply(const TeleopCommand& cmd) {
  effective_ = cmd;
  Step(cmd);
  if (recording_) demo_.records.push_back({cmd, state_});
}

void TeleopSession::Step(const TeleopCommand& cmd) {
  const double dt = options_.control_dt;
  state_.pose = OdometryStep(options_.base, state_.pose,
                             WheelSpeedsFromTwist(options_.base, cmd.twist), dt);
  state_.t = state_.pose.timestamp;
  state_.lift = std::clamp(state_.lift + cmd.lift, 0.0, options_.lift_max);
  state_.grip = cmd.grip;

  Eigen::Vector2d delta = cmd.ee_delta;
  if (delta.norm() > options_.max_ee_step) {
    delta *= options_.max_ee_step / delta.norm();
  }
  if (delta.squaredNorm() > 0.0) {
    state_.theta_ref = HandIk(options_.arm, hand_target_ + delta, state_.theta_ref);
    // the target follows the reachable hand so it never winds up outside
    hand_target_ = HandPosition(options_.arm, state_.theta_ref);
    l_ref_ = CommandForStiffness(options_.arm, state_.theta_ref, options_.k_ref).l_ref;
    Settle();
  }
}

void TeleopSession::Settle() {
  QuasiStaticOptions qs;
  Eigen::VectorXd start = state_.theta.size() == options_.arm.n_joints
                              ? state_.theta
                              : state_.theta_ref;
  qs.initial_theta = &start;
  Equilibrium eq = QuasiStaticSolve(
      options_.arm, l_ref_, Eigen::VectorXd::Zero(options_.arm.n_joints), qs);
  state_.theta = eq.theta;
  state_.f = eq.tension;
  state_.tip = HandPosition(options_.arm, state_.theta);
}

// ----- demonstrations ----- //

void WriteDemonstration(const Demonstration& demo, std::ostream& out) {
  const TeleopOptions& o = demo.options;
  ordered_json header;
  header["type"] = "demo";
  header["ver"] = kDemonstrationVersion;
  header["control_dt"] = o.control_dt;
  header["state_period"] = o.state_period;
  header["command_timeout"] = o.command_timeout;
  header["k_ref"] = o.k_ref;
  header["theta0"] = Array(o.theta0);
  header["lift_max"] = o.lift_max;
  header["max_ee_step"] = o.max_ee_step;
  header["base"] = {{"a", o.base.a}, {"b", o.base.b},
                    {"wheel_radius", o.base.wheel_radius}};
  header["arm"] = ArmPlantToJson(o.arm);
  header["start"] = StateJson(demo.start);
  out << header.dump() << '\n';
  for (const DemoRecord& r : demo.records) {
    ordered_json j;
    j["t"] = r.state.t;
    j["cmd"] = CommandJson(r.cmd);
    j["state"] = StateJson(r.state);
    out << j.dump() << '\n';
  }
}

void SaveDemonstration(const Demonstration& demo, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write demonstration " + path);
  WriteDemonstration(demo, out);
  if (!out) throw FormatError("failed writing demonstration " + path);
}

Demonstration ReadDemonstration(std::istream& in) {
  Demonstration demo;
  std::string line;
  int64_t offset = 0;  // start of the next line
  int64_t at = 0;      // start of the line being parsed
  bool have_header = false;
  double last_t = 0.0;
  auto fail = [&](const std::string& what) {
    throw FormatError("demonstration: " + what + " at byte " +
                      std::to_string(at));
  };
  while (std::getline(in, line)) {
    at = offset;
    const bool complete = !in.eof();
    offset += static_cast<int64_t>(line.size()) + (complete ? 1 : 0);
    // every record is newline-terminated, so a bare tail was cut off
    if (!complete) fail("truncated record");
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail("malformed record");
    try {
      if (!have_header) {
        if (j.value("type", "") != "demo") fail("missing header");
        if (!j.contains("ver") || j["ver"] != kDemonstrationVersion) {
          fail("unsupported version " + (j.contains("ver") ? j["ver"].dump() : "none"));
        }
        ExactKeys(j, {"type", "ver", "control_dt", "state_period",
                      "command_timeout", "k_ref", "theta0", "lift_max",
                      "max_ee_step", "base", "arm", "start"});
        TeleopOptions& o = demo.options;
        o.control_dt = Number(j, "control_dt");
        o.state_period = Number(j, "state_period");
        o.command_timeout = Number(j, "command_timeout");
        o.k_ref = Number(j, "k_ref");
        o.theta0 = Numbers(j, "theta0", 2);
        o.lift_max = Number(j, "lift_max");
        o.max_ee_step = Number(j, "max_ee_step");
        const json& base = j["base"];
        ExactKeys(base, {"a", "b", "wheel_radius"});
        o.base.a = Number(base, "a");
        o.base.b = Number(base, "b");
        o.base.wheel_radius = Number(base, "wheel_radius");
        o.arm = ArmPlantFromJson(j["arm"]);
        demo.start = StateFromJson(j["start"], o.arm.n_joints, o.arm.n_muscles);
        last_t = demo.start.t;
        have_header = true;
      } else {
        ExactKeys(j, {"t", "cmd", "state"});
        DemoRecord r;
        const json& cmd = j["cmd"];
        ExactKeys(cmd, {"twist", "ee_delta", "lift", "grip", "seq"});
        r.cmd = CommandFromJson(cmd);
        r.state = StateFromJson(j["state"], demo.options.arm.n_joints,
                                demo.options.arm.n_muscles);
        if (Number(j, "t") != r.state.t) fail("timestamp mismatch");
        if (!(r.state.t > last_t)) fail("timestamps not increasing");
        last_t = r.state.t;
        demo.records.push_back(std::move(r));
      }
    } catch (const FormatError& e) {
      if (std::string(e.what()).rfind("demonstration:", 0) == 0) throw;
      fail(e.what());
    } catch (const Error& e) {
      fail(e.what());
    } catch (const json::exception& e) {
      fail(e.what());
    }
  }
  if (!have_header) fail("missing header");
  return demo;
}

Demonstration LoadDemonstration(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open demonstration " + path);
  return ReadDemonstration(in);
}

ReplayResult Replay(const Demonstration& demo, const ReplayOptions& options) {
  if (options.speed < 0.0) throw UsageError("Replay: speed must be >= 0");
  TeleopSession session(demo.options);
  session.Restore(demo.start);
  const auto wall0 = std::chrono::steady_clock::now();
  for (const DemoRecord& r : demo.records) {
    session.Apply(r.cmd);
    if (options.speed > 0.0) {
      const double sim = session.state().t - demo.start.t;
      std::this_thread::sleep_until(
          wall0 + std::chrono::duration<double>(sim / options.speed));
    }
  }
  ReplayResult result;
  result.final_state = session.state();
  result.ticks = static_cast<int>(demo.records.size());
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  const TeleopState& want = demo.records.empty() ? demo.start : demo.records.back().state;
  result.theta_error = (result.final_state.theta - want.theta).cwiseAbs().maxCoeff();
  result.pose_error = std::hypot(result.final_state.pose.x - want.pose.x,
                                 result.final_state.pose.y - want.pose.y);
  return result;
}

}  // namespace muskwheel
