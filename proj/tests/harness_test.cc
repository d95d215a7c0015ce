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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gtest/gtest.h"
#include "json.hpp"
#include "muskwheel/core/errors.h"
#include "muskwheel/harness/arm_mode.h"
#include "muskwheel/harness/config.h"
#include "muskwheel/harness/report.h"
#include "muskwheel/harness/scenarios.h"
#include "muskwheel/harness/teleop.h"

namespace muskwheel {
namespace {

using nlohmann::json;

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TeleopCommand Forward(double vx, int64_t seq) {
  TeleopCommand c;
  c.twist[0] = vx;
  c.seq = seq;
  return c;
}

// ----- scenario config ----- //

TEST(ScenarioConfig, MinimalConfigTakesDefaults) {
  const ScenarioConfig cfg = ParseScenarioConfig(json{{"seed", 3}}, "muscle_addition");
  EXPECT_EQ(cfg.scenario, ScenarioId::kMuscleAddition);
  EXPECT_EQ(cfg.seed, 3u);
  EXPECT_EQ(cfg.muscle.payload, 1.0);
  EXPECT_EQ(cfg.static_schema.samples, 4000);
}

TEST(ScenarioConfig, SeedIsMandatory) {
  EXPECT_THROW(ParseScenarioConfig(json::object(), "teach_demo"), ConfigError);
  EXPECT_THROW(ParseScenarioConfig(json{{"seed", -1}}, "teach_demo"), ConfigError);
  EXPECT_THROW(ParseScenarioConfig(json{{"seed", 1.5}}, "teach_demo"), ConfigError);
  const int64_t seed = 9;
  EXPECT_EQ(ParseScenarioConfig(json::object(), "teach_demo", &seed).seed, 9u);
  // the command line wins over the file
  EXPECT_EQ(ParseScenarioConfig(json{{"seed", 2}}, "teach_demo", &seed).seed, 9u);
}

TEST(ScenarioConfig, UnknownKeysRejectedAtEveryLevel) {
  const json bad[] = {
      {{"seed", 1}, {"seeds", 2}},
      {{"seed", 1}, {"params", {{"speed", 0.3}, {"sped", 1}}}},
      {{"seed", 1}, {"schema", {{"static", {{"epoch", 3}}}}}},
      {{"seed", 1}, {"schema", {{"recurrent", json::object()}}}},
      {{"seed", 1}, {"base", {{"radius", 0.1}}}},
      {{"seed", 1}, {"plant", {{"mass", 1.0}}}},
  };
  for (const json& j : bad) {
    EXPECT_THROW(ParseScenarioConfig(j, "teach_demo"), ConfigError) << j.dump();
  }
}

TEST(ScenarioConfig, ScenarioMustAgree) {
  const json j = {{"scenario", "table_setting"}, {"seed", 1}};
  EXPECT_EQ(ParseScenarioConfig(j).scenario, ScenarioId::kTableSetting);
  EXPECT_THROW(ParseScenarioConfig(j, "teach_demo"), ConfigError);
  EXPECT_THROW(ParseScenarioConfig(json{{"seed", 1}}), ConfigError);
  EXPECT_THROW(ParseScenarioConfig(json{{"seed", 1}}, "duster"), ConfigError);
}

TEST(ScenarioConfig, BadValuesRejected) {
  EXPECT_THROW(ParseScenarioConfig(json{{"seed", 1}, {"params", {{"speed", 0.0}}}},
                                   "teach_demo"),
               ConfigError);
  EXPECT_THROW(ParseScenarioConfig(json{{"seed", 1}, {"params", {{"reach", {1.0}}}}},
                                   "teach_demo"),
               ConfigError);
  EXPECT_THROW(ParseScenarioConfig(json{{"seed", 1}, {"base", {{"a", -0.1}}}},
                                   "teach_demo"),
               ConfigError);
  EXPECT_THROW(ParseScenarioConfig(json{{"seed", 1}, {"params", {{"objects", json::array()}}}},
                                   "table_setting"),
               ConfigError);
}

TEST(ScenarioConfig, RoundTrip) {
  json j = {{"seed", 5},
            {"out", "x"},
            {"plant", {{"payload_mass", 0.1}}},
            {"params", {{"payload", 0.7}, {"relax", true}}}};
  const ScenarioConfig a = ParseScenarioConfig(j, "muscle_addition");
  const ScenarioConfig b = ParseScenarioConfig(json::parse(ScenarioConfigToJson(a).dump()));
  EXPECT_EQ(ScenarioConfigToJson(a).dump(), ScenarioConfigToJson(b).dump());
  EXPECT_TRUE(b.muscle.relax);
  EXPECT_EQ(b.muscle.payload, 0.7);
}

// ----- report ----- //

TEST(Report, CsvFormat) {
  Trajectory t;
  t.name = "x";
  t.columns = {"a", "b"};
  t.Add({0.1, 2.0});
  t.Add({-1e-20, 3.0});
  EXPECT_EQ(FormatCsv(t), "a,b\n0.10000000000000001,2\n-9.9999999999999995e-21,3\n");
  EXPECT_THROW(t.Add({1.0}), UsageError);
}

TEST(Report, WritesFilesByteIdentically) {
  Report r;
  r.metrics["value"] = 1.0 / 3.0;
  r.metrics["list"] = {1, 2};
  Trajectory t;
  t.name = "traj";
  t.columns = {"t"};
  t.Add({0.5});
  r.trajectories.push_back(t);
  r.files.emplace_back("note.txt", "hi\n");
  const std::string d1 = ::testing::TempDir() + "report_a";
  const std::string d2 = ::testing::TempDir() + "report_b";
  const auto w1 = WriteReport(r, d1);
  const auto w2 = WriteReport(r, d2);
  ASSERT_EQ(w1.size(), 3u);
  for (size_t i = 0; i < w1.size(); ++i) EXPECT_EQ(ReadFile(w1[i]), ReadFile(w2[i]));
  EXPECT_EQ(json::parse(ReadFile(w1[0]))["value"].get<double>(), 1.0 / 3.0);
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
}

// ----- mode exclusion ----- //

TEST(ArmMode, RelaxationAndStiffnessExclude) {
  ArmModeGuard guard;
  EXPECT_NO_THROW(guard.RequireStiffnessCommand());
  EXPECT_NO_THROW(guard.RequireRelaxation());
  guard.Switch(ArmMode::kRelaxation);
  EXPECT_THROW(guard.RequireStiffnessCommand(), ModeError);
  EXPECT_NO_THROW(guard.RequireRelaxation());
  guard.Switch(ArmMode::kVariableStiffness);
  EXPECT_THROW(guard.RequireRelaxation(), ModeError);
  EXPECT_NO_THROW(guard.RequireStiffnessCommand());
}

TEST(ArmMode, GuardedCallsRefuseTheOtherMode) {
  const ArmPlant plant = ArmPlant::Default();
  const StaticNet net(StaticNet::Shape{}, 1);
  const Eigen::Vector2d theta(0.2, 0.4);
  const SensorTriple current{theta, Eigen::VectorXd::Constant(4, 5.0),
                             Eigen::VectorXd::Constant(4, 0.3), {1, 1, 1}};
  ArmModeGuard relax;
  relax.Switch(ArmMode::kRelaxation);
  EXPECT_THROW(GuardedSolveControl(relax, net, plant, theta, Eigen::VectorXd::Constant(2, 1.0),
                                   current),
               ModeError);
  ArmModeGuard stiff;
  stiff.Switch(ArmMode::kVariableStiffness);
  const Eigen::VectorXd f = Eigen::VectorXd::Constant(4, 5.0);
  EXPECT_THROW(GuardedRelaxStep(stiff, plant, f, f, Eigen::VectorXd::Constant(4, 0.3)),
               ModeError);
}

// ----- wire protocol ----- //

TEST(Protocol, ParsesClientFrames) {
  const ClientMessage m = ParseClientMessage(
      R"({"type":"cmd","twist":[0.1,0,0.2],"ee_delta":[0.01,-0.02],"lift":0.005,"grip":1,"seq":7})");
  const auto& c = std::get<TeleopCommand>(m);
  EXPECT_EQ(c.twist, Eigen::Vector3d(0.1, 0, 0.2));
  EXPECT_EQ(c.ee_delta, Eigen::Vector2d(0.01, -0.02));
  EXPECT_EQ(c.lift, 0.005);
  EXPECT_EQ(c.grip, 1);
  EXPECT_EQ(c.seq, 7);
  EXPECT_EQ(std::get<HelloMessage>(ParseClientMessage(R"({"type":"hello","ver":1})")).ver, 1);
  EXPECT_TRUE(std::get<RecordMessage>(ParseClientMessage(R"({"type":"record","on":true})")).on);
}

TEST(Protocol, CommandFrameRoundTrips) {
  TeleopCommand c = Forward(0.3, 12);
  c.ee_delta << 0.001, 0.002;
  c.grip = 1;
  const auto back = std::get<TeleopCommand>(ParseClientMessage(CommandFrame(c)));
  EXPECT_EQ(back.twist, c.twist);
  EXPECT_EQ(back.ee_delta, c.ee_delta);
  EXPECT_EQ(back.seq, 12);
}

TEST(Protocol, RejectsMalformedFrames) {
  const char* bad[] = {
      "not json",
      "[1,2]",
      R"({"ver":1})",
      R"({"type":"jump"})",
      "{\"type\":\"hello\",\n\"ver\":1}",
      R"({"type":"hello","ver":"1"})",
      R"({"type":"record","on":1})",
      R"({"type":"cmd","twist":[0,0],"ee_delta":[0,0],"lift":0,"grip":0,"seq":1})",
      R"({"type":"cmd","twist":[0,0,0],"ee_delta":[0,0],"lift":0,"grip":2,"seq":1})",
      R"({"type":"cmd","twist":[0,0,0],"ee_delta":[0,0],"lift":0,"grip":0})",
      R"({"type":"cmd","twist":[0,0,0],"ee_delta":[0,0],"lift":0,"grip":0,"seq":-1})",
      R"({"type":"cmd","twist":[0,0,0],"ee_delta":[0,0],"lift":0,"grip":0,"seq":1,"x":0})",
      R"({"type":"cmd","twist":[0,"a",0],"ee_delta":[0,0],"lift":0,"grip":0,"seq":1})",
  };
  for (const char* text : bad) {
    EXPECT_THROW(ParseClientMessage(text), FormatError) << text;
  }
}

TEST(Protocol, ServerFrames) {
  TeleopSession s;
  const json state = json::parse(StateFrame(s.state()));
  EXPECT_EQ(state["type"], "state");
  EXPECT_EQ(state["pose"].size(), 3u);
  EXPECT_EQ(state["theta"].size(), 2u);
  EXPECT_EQ(state["f"].size(), 4u);
  EXPECT_EQ(state["tip"].size(), 2u);
  EXPECT_EQ(state["t"], 0.0);
  EXPECT_EQ(json::parse(ErrorFrame("bad"))["msg"], "bad");
  EXPECT_EQ(json::parse(HelloFrame())["ver"], kProtocolVersion);
  EXPECT_EQ(json::parse(RecordFrame(true))["on"], true);
  for (const std::string& f : {StateFrame(s.state()), ErrorFrame("a\nb"), HelloFrame()}) {
    EXPECT_EQ(f.find('\n'), std::string::npos);
  }
}

// ----- session ----- //

TEST(TeleopSession, HoldsWithoutClient) {
  TeleopSession s;
  const TeleopState start = s.state();
  for (int i = 0; i < 100; ++i) s.Tick();
  EXPECT_EQ(s.state().pose.x, 0.0);
  EXPECT_EQ(s.state().theta, start.theta);
  EXPECT_EQ(s.state().f, start.f);
  EXPECT_NEAR(s.state().t, 2.0, 1e-12);
}

TEST(TeleopSession, InitialPostureIsHeld) {
  TeleopSession s;
  EXPECT_LT((s.state().theta - s.options().theta0).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(TeleopSession, ForwardTwistForOneSecond) {
  TeleopSession s;
  for (int i = 0; i < 50; ++i) {
    s.Submit(Forward(0.4, i + 1));
    s.Tick();
  }
  EXPECT_NEAR(s.state().pose.x, 0.4, 1e-9);
  EXPECT_NEAR(s.state().pose.y, 0.0, 1e-12);
}

TEST(TeleopSession, LatestCommandWins) {
  TeleopSession s;
  EXPECT_TRUE(s.Submit(Forward(1.0, 1)));
  EXPECT_TRUE(s.Submit(Forward(0.2, 2)));
  s.Tick();
  EXPECT_EQ(s.effective().twist[0], 0.2);
  EXPECT_NEAR(s.state().pose.x, 0.2 * 0.02, 1e-15);
}

TEST(TeleopSession, StaleSequenceDropped) {
  TeleopSession s;
  EXPECT_TRUE(s.Submit(Forward(0.3, 5)));
  EXPECT_FALSE(s.Submit(Forward(9.0, 3)));
  EXPECT_FALSE(s.Submit(Forward(9.0, 5)));
  s.Tick();
  EXPECT_EQ(s.effective().twist[0], 0.3);
}

TEST(TeleopSession, CommandGapStopsTheBase) {
  TeleopSession s;
  s.Submit(Forward(0.5, 1));
  int moving = 0;
  for (int i = 0; i < 60; ++i) {
    s.Tick();
    if (s.effective().twist[0] != 0.0) ++moving;
  }
  // the twist persists through the 0.5 s grace period, then stops
  EXPECT_EQ(moving, 26);
  const double x = s.state().pose.x;
  for (int i = 0; i < 10; ++i) s.Tick();
  EXPECT_EQ(s.state().pose.x, x);
  // a new command resumes motion
  s.Submit(Forward(0.5, 2));
  s.Tick();
  EXPECT_GT(s.state().pose.x, x);
}

TEST(TeleopSession, DisconnectZeroesWithinTwoTicks) {
  TeleopSession s;
  s.Submit(Forward(0.5, 1));
  s.Tick();
  s.Disconnect();
  s.Tick();
  s.Tick();
  EXPECT_EQ(s.effective().twist.norm(), 0.0);
}

TEST(TeleopSession, StateFramesAtTwentyHertz) {
  TeleopSession s;
  int frames = 0;
  for (int i = 0; i < 500; ++i) frames += s.Tick();
  EXPECT_EQ(frames, 200);
}

TEST(TeleopSession, HandFollowsDeltas) {
  TeleopSession s;
  const Eigen::Vector2d tip0 = s.state().tip;
  for (int i = 0; i < 10; ++i) {
    TeleopCommand c;
    c.ee_delta << -0.004, 0.002;
    c.seq = i + 1;
    s.Submit(c);
    s.Tick();
  }
  const Eigen::Vector2d moved = s.state().tip - tip0;
  EXPECT_NEAR(moved[0], -0.04, 2e-3);
  EXPECT_NEAR(moved[1], 0.02, 2e-3);
  EXPECT_TRUE(s.options().arm.WithinLimits(s.state().theta_ref));
}

TEST(TeleopSession, DeltaStepIsClamped) {
  TeleopSession s;
  const Eigen::Vector2d tip0 = s.state().tip;
  TeleopCommand c;
  c.ee_delta << -0.5, 0.0;
  c.seq = 1;
  s.Submit(c);
  s.Tick();
  EXPECT_LT((s.state().tip - tip0).norm(), s.options().max_ee_step + 1e-3);
}

TEST(TeleopSession, LiftAndGrip) {
  TeleopSession s;
  TeleopCommand c;
  c.lift = 0.2;
  c.grip = 1;
  c.seq = 1;
  s.Submit(c);
  s.Tick();
  EXPECT_EQ(s.state().lift, 0.2);
  EXPECT_EQ(s.state().grip, 1);
  c.lift = 10.0;
  c.seq = 2;
  s.Submit(c);
  s.Tick();
  EXPECT_EQ(s.state().lift, s.options().lift_max);
  // lift is a one-shot delta
  s.Tick();
  EXPECT_EQ(s.state().lift, s.options().lift_max);
}

// ----- demonstrations ----- //

// Drives, reaches and lifts for `ticks` control periods while recording.
Demonstration Record(int ticks) {
  TeleopSession s;
  s.Tick();
  s.SetRecording(true);
  for (int i = 0; i < ticks; ++i) {
    TeleopCommand c = Forward(0.3, i + 1);
    c.twist[2] = 0.2;
    if (i % 3 == 0) c.ee_delta << -0.003, 0.002;
    c.lift = 0.001;
    c.grip = i > ticks / 2;
    s.Submit(c);
    s.Tick();
  }
  s.SetRecording(false);
  return s.demonstration();
}

std::string Text(const Demonstration& demo) {
  std::ostringstream out;
  WriteDemonstration(demo, out);
  return out.str();
}

Demonstration Parse(const std::string& text) {
  std::istringstream in(text);
  return ReadDemonstration(in);
}

TEST(Demonstration, TimestampsStrictlyIncreaseAtTheTickRate) {
  const Demonstration demo = Record(40);
  ASSERT_EQ(demo.records.size(), 40u);
  double last = demo.start.t;
  for (const DemoRecord& r : demo.records) {
    EXPECT_GT(r.state.t, last);
    EXPECT_NEAR(r.state.t - last, 0.02, 1e-12);
    last = r.state.t;
  }
}

TEST(Demonstration, FileRoundTripsByteIdentically) {
  const std::string text = Text(Record(30));
  EXPECT_EQ(Text(Parse(text)), text);
  EXPECT_EQ(json::parse(text.substr(0, text.find('\n')))["type"], "demo");
}

TEST(Demonstration, ReplayReachesTheRecordedState) {
  const Demonstration demo = Parse(Text(Record(60)));
  const ReplayResult r = Replay(demo);
  EXPECT_EQ(r.ticks, 60);
  EXPECT_LE(r.theta_error, 1e-6);
  EXPECT_LE(r.pose_error, 1e-9);
  EXPECT_GT(r.final_state.pose.x, 0.3);
}

TEST(Demonstration, ReplaySpeedOnlyChangesWallTime) {
  const Demonstration demo = Record(25);  // 0.5 s
  const ReplayResult slow = Replay(demo, {2.0});
  const ReplayResult fast = Replay(demo, {4.0});
  EXPECT_EQ(slow.final_state.theta, fast.final_state.theta);
  EXPECT_EQ(slow.final_state.pose.x, fast.final_state.pose.x);
  EXPECT_NEAR(slow.wall_seconds, 0.25, 0.05);
  EXPECT_NEAR(fast.wall_seconds, 0.125, 0.05);
  EXPECT_GT(slow.wall_seconds, 1.5 * fast.wall_seconds);
}

TEST(Demonstration, TruncatedFileNamesByteOffset) {
  const std::string text = Text(Record(5));
  const size_t second = text.find('\n', text.find('\n') + 1) + 1;  // record 2
  try {
    Parse(text.substr(0, second + 20));
    FAIL() << "truncated file parsed";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("byte " + std::to_string(second)),
              std::string::npos)
        << e.what();
  }
}

TEST(Demonstration, VersionMismatchIsFormatError) {
  std::string text = Text(Record(3));
  text.replace(text.find("\"ver\":1"), 7, "\"ver\":2");
  try {
    Parse(text);
    FAIL() << "wrong version parsed";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos) << e.what();
  }
}

TEST(Demonstration, BadRecordsAreFormatErrors) {
  const std::string text = Text(Record(3));
  const size_t first = text.find('\n') + 1;
  const size_t second = text.find('\n', first) + 1;
  // records out of order
  const std::string swapped =
      text.substr(0, first) + text.substr(second, text.find('\n', second) + 1 - second) +
      text.substr(first, second - first) + text.substr(text.find('\n', second) + 1);
  EXPECT_THROW(Parse(swapped), FormatError);
  EXPECT_THROW(Parse(""), FormatError);
  EXPECT_THROW(Parse(text.substr(first)), FormatError);  // no header
  EXPECT_THROW(LoadDemonstration("/nonexistent/demo.jsonl"), FormatError);
}

// ----- scenarios ----- //

TEST(Scenario, TeachDemoDrivesAndReplays) {
  const Report r = RunScenario(ParseScenarioConfig(json{{"seed", 4}}, "teach_demo"));
  EXPECT_LT(r.metrics["drive_error"].get<double>(), 0.01);
  EXPECT_LE(r.metrics["replay_theta_error"].get<double>(), 1e-6);
  EXPECT_LT(r.metrics["reach_error"].get<double>(), 1e-3);
  EXPECT_EQ(r.metrics["grip"], 1);
  ASSERT_EQ(r.files.size(), 1u);
  const Demonstration demo = Parse(r.files[0].second);
  EXPECT_EQ(demo.records.size(), r.metrics["records"].get<size_t>());
}

TEST(Scenario, TeachDemoIsDeterministic) {
  const ScenarioConfig cfg = ParseScenarioConfig(json{{"seed", 4}}, "teach_demo");
  const std::string d1 = ::testing::TempDir() + "teach_a";
  const std::string d2 = ::testing::TempDir() + "teach_b";
  const auto w1 = WriteReport(RunScenario(cfg), d1);
  const auto w2 = WriteReport(RunScenario(cfg), d2);
  ASSERT_EQ(w1.size(), w2.size());
  for (size_t i = 0; i < w1.size(); ++i) EXPECT_EQ(ReadFile(w1[i]), ReadFile(w2[i]));
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
}

TEST(Scenario, ModuleErrorsCarryScenarioContext) {
  const ScenarioConfig cfg = ParseScenarioConfig(
      json{{"seed", 1}, {"params", {{"objects", {"cup"}}}}}, "table_setting");
  try {
    RunScenario(cfg);
    FAIL() << "unknown object accepted";
  } catch (const ScenarioError& e) {
    EXPECT_NE(std::string(e.what()).find("table_setting"), std::string::npos);
    EXPECT_THROW(std::rethrow_if_nested(e), UsageError);
  }
}

}  // namespace
}  // namespace muskwheel
