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


#include "muskwheel/harness/scenarios.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>
#include <vector>

#include "muskwheel/control/swing_task.h"
#include "muskwheel/harness/teleop.h"
#include "muskwheel/plant/plant_config.h"
#include "muskwheel/reflex/tension_qp.h"
#include "muskwheel/schema/dynamic_schema.h"

namespace muskwheel {

namespace {

using nlohmann::ordered_json;

std::vector<double> Array(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// Runs one pipeline stage, nesting any module error under the scenario
// name and stage.
template <typename F>
auto Stage(const ScenarioConfig& cfg, const char* stage, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    std::throw_with_nested(ScenarioError(ScenarioName(cfg.scenario) + ": " +
                                         stage + ": " + e.what()));
  }
}

// ----- teach_demo ----- //

TeleopCommand Heartbeat(const TeleopSession& s, int64_t seq) {
  TeleopCommand c;
  c.grip = s.state().grip;
  c.seq = seq;
  return c;
}

Trajectory TeachTrajectory(const Demonstration& demo) {
  Trajectory t;
  t.name = "teach";
  t.columns = {"t", "x", "y", "psi", "vx", "vy", "wz", "theta0", "theta1",
               "tip_x", "tip_y", "lift", "grip"};
  const int m = demo.options.arm.n_muscles;
  for (int i = 0; i < m; ++i) t.columns.push_back("f" + std::to_string(i));
  for (const DemoRecord& r : demo.records) {
    const TeleopState& s = r.state;
    std::vector<double> row = {s.t, s.pose.x, s.pose.y, s.pose.psi,
                               r.cmd.twist[0], r.cmd.twist[1], r.cmd.twist[2],
                               s.theta[0], s.theta[1], s.tip[0], s.tip[1],
                               s.lift, static_cast<double>(s.grip)};
    for (int i = 0; i < m; ++i) row.push_back(s.f[i]);
    t.Add(std::move(row));
  }
  return t;
}

// ----- muscle_addition ----- //

// Sensor reading while the plant holds `theta` with the least tension
// that keeps every muscle above `floor`.
SensorTriple HoldingReading(const ArmPlant& plant, const Eigen::VectorXd& theta,
                            double floor) {
  const Eigen::VectorXd f = SolveNecessaryTension(HoldingProblem(plant, theta, floor)).x;
  const Eigen::VectorXd l =
      MuscleLengths(plant, theta) - f.cwiseQuotient(plant.elastic_k).cwiseSqrt();
  const Equilibrium eq = QuasiStaticSolve(plant, l, Eigen::VectorXd::Zero(plant.n_joints));
  return {eq.theta, eq.tension, l, {1, 1, 1}};
}

struct Hold {
  Eigen::VectorXd l_ref;
  Equilibrium eq;
};

Hold HoldWithSchema(const ArmModeGuard& guard, const StaticNet& net,
                    const ArmPlant& plant, const Eigen::VectorXd& posture,
                    const ControlOptions& options) {
  const SensorTriple current = HoldingReading(plant, posture, 5.0);
  const ControlResult r =
      GuardedSolveControl(guard, net, plant, posture, std::nullopt, current, options);
  return {r.l_ref, QuasiStaticSolve(plant, r.l_ref, Eigen::VectorXd::Zero(plant.n_joints))};
}

ordered_json RmseJson(const MaskedRmse& r) {
  return {{"theta", r.theta}, {"f", r.f}, {"l", r.l}};
}

}  // namespace

ArmPlant ScenarioArmPlant(const ScenarioConfig& cfg, const ArmPlant& base) {
  return ArmPlantFromJson(cfg.plant, base);
}

ControlResult GuardedSolveControl(const ArmModeGuard& guard,
                                  const StaticNet& net, const ArmPlant& plant,
                                  const Eigen::VectorXd& theta_ref,
                                  const std::optional<Eigen::VectorXd>& k_ref,
                                  const SensorTriple& current,
                                  const ControlOptions& options) {
  if (k_ref) guard.RequireStiffnessCommand();
  return SolveControl(net, plant, theta_ref, k_ref, current, options);
}

RelaxResult GuardedRelaxStep(const ArmModeGuard& guard, const ArmPlant& plant,
                             const Eigen::VectorXd& f_nec,
                             const Eigen::VectorXd& f_current,
                             const Eigen::VectorXd& l_current,
                             const RelaxOptions& options) {
  guard.RequireRelaxation();
  return RelaxStep(plant, f_nec, f_current, l_current, options);
}

Report RunTeachDemo(const ScenarioConfig& cfg) {
  const TeachDemoParams& p = cfg.teach;
  TeleopOptions options;
  options.arm = Stage(cfg, "plant", [&] { return ScenarioArmPlant(cfg, ArmPlant::Default()); });
  options.base = cfg.base;
  TeleopSession session = Stage(cfg, "session", [&] { return TeleopSession(options); });
  const double dt = options.control_dt;
  int64_t seq = 0;

  // scripted operator, one command per control tick
  const Eigen::Vector2d tip0 = session.state().tip;
  Stage(cfg, "teach", [&] {
    session.SetRecording(true);
    session.Submit(Heartbeat(session, ++seq));
    session.Tick();
    const double x0 = session.state().pose.x;
    while (session.state().pose.x - x0 < p.drive_distance - 1e-12) {
      TeleopCommand c = Heartbeat(session, ++seq);
      c.twist[0] = std::min(p.speed, (p.drive_distance - (session.state().pose.x - x0)) / dt);
      session.Submit(c);
      session.Tick();
    }
    const int reach_ticks = static_cast<int>(std::ceil(p.reach.norm() / options.max_ee_step));
    for (int i = 0; i < reach_ticks; ++i) {
      TeleopCommand c = Heartbeat(session, ++seq);
      c.ee_delta = p.reach / reach_ticks;
      session.Submit(c);
      session.Tick();
    }
    const int lift_ticks = static_cast<int>(std::ceil(p.lift / 0.01));
    for (int i = 0; i < lift_ticks; ++i) {
      TeleopCommand c = Heartbeat(session, ++seq);
      c.lift = p.lift / lift_ticks;
      session.Submit(c);
      session.Tick();
    }
    TeleopCommand grip = Heartbeat(session, ++seq);
    grip.grip = 1;
    session.Submit(grip);
    session.Tick();
    for (int i = 0; i < 25; ++i) {
      session.Submit(Heartbeat(session, ++seq));
      session.Tick();
    }
    session.SetRecording(false);
    return 0;
  });

  const Demonstration& demo = session.demonstration();
  std::ostringstream demo_text;
  WriteDemonstration(demo, demo_text);
  const ReplayResult replay = Stage(cfg, "replay", [&] {
    std::istringstream in(demo_text.str());
    return Replay(ReadDemonstration(in));
  });

  const TeleopState& end = session.state();
  Report report;
  ordered_json& m = report.metrics;
  m["scenario"] = "teach_demo";
  m["seed"] = cfg.seed;
  m["drive_distance"] = p.drive_distance;
  m["odometry"] = {end.pose.x, end.pose.y, end.pose.psi};
  m["drive_error"] = std::abs(end.pose.x - demo.start.pose.x - p.drive_distance);
  m["hand_displacement"] = Array(end.tip - tip0);
  m["reach_error"] = (end.tip - tip0 - p.reach).norm();
  m["lift"] = end.lift;
  m["grip"] = end.grip;
  m["records"] = demo.records.size();
  m["duration"] = end.t - demo.start.t;
  m["replay_theta_error"] = replay.theta_error;
  m["replay_pose_error"] = replay.pose_error;
  report.trajectories.push_back(TeachTrajectory(demo));
  report.files.emplace_back("demo.jsonl", demo_text.str());
  return report;
}

Report RunMuscleAddition(const ScenarioConfig& cfg) {
  const MuscleAdditionParams& p = cfg.muscle;
  const StaticSchemaParams& sp = cfg.static_schema;
  ArmPlant plant = Stage(cfg, "plant", [&] {
    ArmPlant a = ScenarioArmPlant(cfg, ArmPlant::Default());
    a.payload_mass = p.payload;
    a.Validate();
    return a;
  });
  const Eigen::VectorXd posture = p.posture;
  ArmModeGuard guard;
  if (p.relax) guard.Switch(ArmMode::kRelaxation);
  ControlOptions control;
  control.w_f = p.w_f;

  StaticNet net(StaticNet::Shape{plant.n_joints, plant.n_muscles, sp.latent, sp.hidden},
                cfg.seed + 1);
  StaticTrainOptions train;
  train.epochs = sp.epochs;
  const StaticTrainReport trained = Stage(cfg, "train", [&] {
    return TrainInitial(&net, plant, sp.samples, cfg.seed + 2, train);
  });
  const Hold before = Stage(cfg, "hold", [&] {
    return HoldWithSchema(guard, net, plant, posture, control);
  });

  // growth: one more shoulder flexor; old channels must be untouched
  Eigen::VectorXd arms = Eigen::VectorXd::Zero(plant.n_joints);
  arms[0] = -p.added_moment_arm;
  const ArmPlant grown_plant = Stage(cfg, "grow", [&] {
    return plant.WithAddedMuscle(arms, plant.rest_lengths[0], plant.elastic_k[0]);
  });
  StaticNet grown = net.Grow(1, cfg.seed + 3);
  bool bit_equal = true;
  for (const SensorTriple& h : trained.holdout_set) {
    for (const Mask& mask : kTrainingMasks) {
      SensorTriple t = h;
      t.mask = mask;
      SensorTriple g = t;
      g.f.conservativeResize(plant.n_muscles + 1);
      g.l.conservativeResize(plant.n_muscles + 1);
      g.f[plant.n_muscles] = 0.0;
      g.l[plant.n_muscles] = 0.0;
      const StaticPrediction a = net.Complete(t);
      const StaticPrediction b = grown.Complete(g);
      bit_equal = bit_equal && a.theta == b.theta &&
                  a.f == b.f.head(plant.n_muscles) && a.l == b.l.head(plant.n_muscles);
    }
  }
  StaticTrainOptions regrow;
  regrow.epochs = sp.regrow_epochs;
  const StaticTrainReport retrained = Stage(cfg, "retrain", [&] {
    return TrainInitial(&grown, grown_plant, sp.regrow_samples, cfg.seed + 4, regrow);
  });
  const Hold after = Stage(cfg, "hold after growth", [&] {
    return HoldWithSchema(guard, grown, grown_plant, posture, control);
  });

  Report report;
  ordered_json& m = report.metrics;
  m["scenario"] = "muscle_addition";
  m["seed"] = cfg.seed;
  m["payload"] = p.payload;
  m["posture"] = Array(posture);
  m["schema_holdout_rmse"] = RmseJson(trained.holdout);
  m["grown_schema_holdout_rmse"] = RmseJson(retrained.holdout);
  m["growth_bit_equal"] = bit_equal;
  m["tension_before"] = Array(before.eq.tension);
  m["tension_after"] = Array(after.eq.tension);
  m["max_tension_before"] = before.eq.tension.maxCoeff();
  m["max_tension_after"] = after.eq.tension.maxCoeff();
  m["max_tension_drop_percent"] =
      100.0 * (1.0 - after.eq.tension.maxCoeff() / before.eq.tension.maxCoeff());
  m["posture_error_before"] = (before.eq.theta - posture).cwiseAbs().maxCoeff();
  m["posture_error_after"] = (after.eq.theta - posture).cwiseAbs().maxCoeff();

  if (p.relax) {
    auto relax = [&](const ArmPlant& a, const Hold& h) {
      const Eigen::VectorXd f_nec =
          SolveNecessaryTension(HoldingProblem(a, h.eq.theta, 0.0)).x;
      return GuardedRelaxStep(guard, a, f_nec, h.eq.tension, h.l_ref);
    };
    const RelaxResult rb = Stage(cfg, "relax", [&] { return relax(plant, before); });
    const RelaxResult ra = Stage(cfg, "relax after growth", [&] { return relax(grown_plant, after); });
    m["relaxed_max_tension_before"] = rb.tension.maxCoeff();
    m["relaxed_max_tension_after"] = ra.tension.maxCoeff();
    m["relaxed_total_tension_before"] = rb.tension.sum();
    m["relaxed_total_tension_after"] = ra.tension.sum();
  }

  Trajectory t;
  t.name = "tensions";
  t.columns = {"muscle", "before", "after"};
  for (int i = 0; i < grown_plant.n_muscles; ++i) {
    t.Add({static_cast<double>(i), i < plant.n_muscles ? before.eq.tension[i] : 0.0,
           after.eq.tension[i]});
  }
  report.trajectories.push_back(std::move(t));
  return report;
}

Report RunTableSetting(const ScenarioConfig& cfg) {
  const TableSettingParams& p = cfg.table;
  const DynamicSchemaParams& dp = cfg.dynamic_schema;
  SwingTask task = SwingTask::Default();
  task.plant = Stage(cfg, "plant", [&] { return ScenarioArmPlant(cfg, task.plant); });
  ArmModeGuard guard;
  guard.Switch(ArmMode::kVariableStiffness);

  // ten extra runs per object are held out for the one-step error
  constexpr int kHeldOut = 10;
  const int per_object = dp.per_object + kHeldOut;
  std::vector<DynSequence> train, test;
  Stage(cfg, "data", [&] {
    for (const std::string& id : p.objects) task.Object(id);
    const auto all = GenerateSwingData(task, per_object, dp.length, cfg.seed + 1);
    for (size_t i = 0; i < all.size(); ++i) {
      ((static_cast<int>(i) % per_object) < dp.per_object ? train : test).push_back(all[i]);
    }
    return 0;
  });
  DynamicsNet::Shape shape;
  shape.hidden = dp.hidden;
  DynamicsNet net(shape, cfg.seed + 2);
  DynTrainOptions train_options;
  train_options.epochs = dp.epochs;
  Stage(cfg, "train", [&] { return TrainDynamics(&net, train, cfg.seed + 3, train_options); });

  StiffnessSweepOptions sweep;
  sweep.k_step = p.k_step;
  sweep.refine.budget = p.budget;
  sweep.final_budget = p.final_budget;
  sweep.plan.seed = cfg.seed + 4;

  Report report;
  ordered_json& m = report.metrics;
  m["scenario"] = "table_setting";
  m["seed"] = cfg.seed;
  m["heldout_one_step_rmse"] = OneStepRmse(net, test);
  ordered_json& objects = m["objects"];
  objects = ordered_json::object();
  for (const std::string& id : p.objects) {
    guard.RequireStiffnessCommand();
    const StiffnessComparison c = Stage(cfg, "compare stiffness", [&] {
      return CompareStiffness(net, task, id, sweep);
    });
    ordered_json& o = objects[id];
    o["p"] = Array(net.p_table().at(id));
    o["fixed_k"] = c.fixed_k;
    o["fixed_peak"] = c.fixed_peak;
    o["best_fixed_k"] = c.best_fixed_k;
    o["best_fixed_peak"] = c.best_fixed_peak;
    o["variable_peak"] = c.variable_peak;
    o["gain_percent"] = 100.0 * c.gain();

    ArmRig rig = task.MakeRig(id);
    const int horizon = sweep.plan.horizon;
    const Episode fixed = RunKnots(task, &rig, c.best_fixed_knots, horizon);
    const Episode variable = RunKnots(task, &rig, c.variable_knots, horizon);
    Trajectory t;
    t.name = "swing_" + id;
    t.columns = {"step", "fixed_speed", "variable_speed", "variable_theta_ref0",
                 "variable_theta_ref1", "variable_k_ref"};
    for (int k = 0; k < variable.u.cols(); ++k) {
      t.Add({static_cast<double>(k), fixed.s.col(k + 1).segment(2, 2).norm(),
             variable.s.col(k + 1).segment(2, 2).norm(), variable.u(0, k),
             variable.u(1, k), variable.u(2, k)});
    }
    report.trajectories.push_back(std::move(t));
  }
  return report;
}

Report RunScenario(const ScenarioConfig& cfg) {
  switch (cfg.scenario) {
    case ScenarioId::kTeachDemo:
      return RunTeachDemo(cfg);
    case ScenarioId::kMuscleAddition:
      return RunMuscleAddition(cfg);
    case ScenarioId::kTableSetting:
      return RunTableSetting(cfg);
  }
  throw UsageError("RunScenario: unknown scenario");
}

}  // namespace muskwheel
