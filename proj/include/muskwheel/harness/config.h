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


#ifndef MUSKWHEEL_HARNESS_CONFIG_H_
#define MUSKWHEEL_HARNESS_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "muskwheel/base/mecanum.h"

namespace muskwheel {

enum class ScenarioId { kTeachDemo, kMuscleAddition, kTableSetting };

std::string ScenarioName(ScenarioId id);
// Throws ConfigError for an unknown name.
ScenarioId ScenarioFromName(const std::string& name);

struct StaticSchemaParams {
  int samples = 4000;
  int epochs = 120;
  int regrow_samples = 3000;  // after adding a muscle
  int regrow_epochs = 60;
  int latent = 8;
  int hidden = 64;
};

struct DynamicSchemaParams {
  int per_object = 100;  // training runs per object
  int length = 40;       // steps per run
  int epochs = 400;
  int hidden = 32;
};

// Scripted teaching session: drive the base, reach with the hand, lift
// and grip while recording, then replay the recording.
struct TeachDemoParams {
  double drive_distance = 1.0;  // m, forward
  double speed = 0.4;           // m/s
  Eigen::Vector2d reach{-0.04, 0.03};  // m, end-effector displacement
  double lift = 0.1;            // m
};

struct MuscleAdditionParams {
  double payload = 1.0;  // kg at the hand
  Eigen::Vector2d posture{0.2, 0.8};
  double added_moment_arm = 0.035;  // m, extra shoulder flexor
  double w_f = 1e-5;  // tension weight of the schema control at this load
  bool relax = false;  // relaxation step after each hold
};

struct TableSettingParams {
  std::vector<std::string> objects{"short", "long"};
  double k_step = 0.5;   // N m/rad, fixed-stiffness sweep
  int budget = 100;      // plant runs per refined arm
  int final_budget = 400;
};

// Parsed scenario configuration. JSON keys:
//   scenario  teach_demo | muscle_addition | table_setting
//   seed      unsigned integer, mandatory
//   out       output directory ("" writes nothing)
//   plant     arm plant overrides (see plant_config.h)
//   base      {"a", "b", "wheel_radius"}
//   schema    {"static": {...}, "dynamic": {...}}
//   params    scenario parameters, keys as the matching *Params struct
// Unknown keys anywhere are a ConfigError.
struct ScenarioConfig {
  ScenarioId scenario = ScenarioId::kTeachDemo;
  uint64_t seed = 0;
  std::string out;
  nlohmann::json plant = nlohmann::json::object();
  BaseGeometry base;
  StaticSchemaParams static_schema;
  DynamicSchemaParams dynamic_schema;
  TeachDemoParams teach;
  MuscleAdditionParams muscle;
  TableSettingParams table;
};

// `j` may omit "scenario" and "seed" when they are given here (command
// line values win); the seed must come from one of the two.
ScenarioConfig ParseScenarioConfig(const nlohmann::json& j,
                                   const std::string& scenario = "",
                                   const int64_t* seed = nullptr);
// Reads a JSON file; FormatError if it cannot be read or parsed.
nlohmann::json ReadJsonFile(const std::string& path);

nlohmann::ordered_json ScenarioConfigToJson(const ScenarioConfig& cfg);

}  // namespace muskwheel

#endif  // MUSKWHEEL_HARNESS_CONFIG_H_
