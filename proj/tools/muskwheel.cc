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


// muskwheel command-line driver.
//
//   muskwheel run <scenario> --config <path> --seed <n> --out <dir>
//   muskwheel serve --port <n> [--config <plant.json>] [--record-dir <dir>]
//   muskwheel replay <file> [--speed <s>]
//   muskwheel train <static|dynamic> --config <path> [--seed <n>] --out <file>

#include <csignal>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "muskwheel/control/swing_task.h"
#include "muskwheel/core/errors.h"
#include "muskwheel/harness/config.h"
#include "muskwheel/harness/report.h"
#include "muskwheel/harness/scenarios.h"
#include "muskwheel/harness/server.h"
#include "muskwheel/harness/teleop.h"
#include "muskwheel/plant/plant_config.h"
#include "muskwheel/schema/dynamic_schema.h"
#include "muskwheel/schema/static_schema.h"

namespace {

using namespace muskwheel;
using nlohmann::json;
using nlohmann::ordered_json;

volatile std::sig_atomic_t g_stop = 0;

void OnSignal(int) { g_stop = 1; }

void PrintNested(const std::exception& e, int depth = 0) {
  std::cerr << std::string(2 * depth, ' ') << "error: " << e.what() << "\n";
  try {
    std::rethrow_if_nested(e);
  } catch (const std::exception& inner) {
    PrintNested(inner, depth + 1);
  }
}

json ConfigJson(const std::string& path) {
  return path.empty() ? json::object() : ReadJsonFile(path);
}

int Run(const std::string& scenario, const std::string& config_path,
        const int64_t* seed, const std::string& out) {
  ScenarioConfig cfg = ParseScenarioConfig(ConfigJson(config_path), scenario, seed);
  if (!out.empty()) cfg.out = out;
  if (cfg.out.empty()) throw ConfigError("output directory missing (--out)");
  const Report report = RunScenario(cfg);
  for (const std::string& path : WriteReport(report, cfg.out)) {
    std::cout << "wrote " << path << "\n";
  }
  std::cout << report.metrics.dump(2) << "\n";
  return 0;
}

int Serve(unsigned short port, const std::string& config_path,
          const std::string& record_dir) {
  TeleopOptions session;
  if (!config_path.empty()) session.arm = LoadPlantConfig(config_path).arm;
  ServerOptions options;
  options.port = port;
  options.record_dir = record_dir;
  TeleopServer server(session, options);
  std::signal(SIGINT, OnSignal);
  std::signal(SIGTERM, OnSignal);
  server.Start();
  std::cout << "listening on ws://" << options.address << ":" << server.port() << "\n"
            << std::flush;
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.Stop();
  for (const std::string& f : server.SavedFiles()) std::cout << "saved " << f << "\n";
  return 0;
}

int ReplayFile(const std::string& path, double speed) {
  const Demonstration demo = LoadDemonstration(path);
  ReplayOptions options;
  options.speed = speed;
  const ReplayResult r = Replay(demo, options);
  ordered_json m;
  m["ticks"] = r.ticks;
  m["theta_error"] = r.theta_error;
  m["pose_error"] = r.pose_error;
  m["wall_seconds"] = r.wall_seconds;
  m["final_pose"] = {r.final_state.pose.x, r.final_state.pose.y, r.final_state.pose.psi};
  std::cout << m.dump(2) << "\n";
  return r.theta_error <= 1e-6 ? 0 : 1;
}

int Train(const std::string& schema, const std::string& config_path,
          const int64_t* seed, const std::string& out) {
  if (schema != "static" && schema != "dynamic") {
    throw UsageError("unknown schema '" + schema + "' (static or dynamic)");
  }
  json j = ConfigJson(config_path);
  // training is the first stage of the scenario using the schema
  if (!j.contains("scenario")) {
    j["scenario"] = schema == "static" ? "muscle_addition" : "table_setting";
  }
  const ScenarioConfig cfg = ParseScenarioConfig(j, "", seed);
  if (out.empty()) throw ConfigError("output file missing (--out)");
  ordered_json m;
  if (schema == "static") {
    const StaticSchemaParams& sp = cfg.static_schema;
    const ArmPlant plant = ScenarioArmPlant(cfg, ArmPlant::Default());
    StaticNet net({plant.n_joints, plant.n_muscles, sp.latent, sp.hidden}, cfg.seed + 1);
    StaticTrainOptions options;
    options.epochs = sp.epochs;
    const StaticTrainReport r = TrainInitial(&net, plant, sp.samples, cfg.seed + 2, options);
    net.Save(out);
    m["holdout_rmse"] = {{"theta", r.holdout.theta}, {"f", r.holdout.f}, {"l", r.holdout.l}};
  } else {
    const DynamicSchemaParams& dp = cfg.dynamic_schema;
    SwingTask task = SwingTask::Default();
    task.plant = ScenarioArmPlant(cfg, task.plant);
    const auto data = GenerateSwingData(task, dp.per_object, dp.length, cfg.seed + 1);
    DynamicsNet::Shape shape;
    shape.hidden = dp.hidden;
    DynamicsNet net(shape, cfg.seed + 2);
    DynTrainOptions options;
    options.epochs = dp.epochs;
    TrainDynamics(&net, data, cfg.seed + 3, options);
    net.Save(out);
    m["one_step_rmse"] = OneStepRmse(net, data);
  }
  m["saved"] = out;
  std::cout << m.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"muskwheel: musculoskeletal arm on a mecanum base"};
  app.require_subcommand(1);

  std::string scenario, config, out, file, schema, record_dir;
  int64_t seed = 0;
  unsigned short port = 8765;
  double speed = 0.0;

  CLI::App* run = app.add_subcommand("run", "run a scenario");
  run->add_option("scenario", scenario, "teach_demo, muscle_addition or table_setting")
      ->required();
  run->add_option("--config", config, "scenario config JSON");
  CLI::Option* run_seed = run->add_option("--seed", seed, "random seed (overrides the config)");
  run->add_option("--out", out, "output directory (overrides the config)");

  CLI::App* serve = app.add_subcommand("serve", "serve the teleop wire protocol");
  serve->add_option("--port", port, "TCP port, 0 for any free one");
  serve->add_option("--config", config, "plant config JSON");
  serve->add_option("--record-dir", record_dir, "where demonstrations are saved");

  CLI::App* replay = app.add_subcommand("replay", "replay a demonstration");
  replay->add_option("file", file, "demonstration (.jsonl)")->required();
  replay->add_option("--speed", speed, "wall-clock pacing, 0 = unpaced");

  CLI::App* train = app.add_subcommand("train", "train a body schema");
  train->add_option("schema", schema, "static or dynamic")->required();
  train->add_option("--config", config, "scenario config JSON")->required();
  CLI::Option* train_seed =
      train->add_option("--seed", seed, "random seed (overrides the config)");
  train->add_option("--out", out, "weights file")->required();

  CLI11_PARSE(app, argc, argv);
  const int64_t* seed_arg = run_seed->count() || train_seed->count() ? &seed : nullptr;
  try {
    if (*run) return Run(scenario, config, seed_arg, out);
    if (*serve) return Serve(port, config, record_dir);
    if (*replay) return ReplayFile(file, speed);
    if (*train) return Train(schema, config, seed_arg, out);
  } catch (const std::exception& e) {
    PrintNested(e);
    return 2;
  }
  return 1;
}
