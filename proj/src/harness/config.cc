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


#include "muskwheel/harness/config.h"

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "muskwheel/core/errors.h"
#include "muskwheel/plant/plant_config.h"

namespace muskwheel {

namespace {

using nlohmann::json;

// Reads the keys of one JSON object into typed fields; Done() rejects any
// key that was not asked for.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be a JSON object");
  }

  template <typename T>
  Fields& operator()(const char* key, T* out) {
    known_.insert(key);
    if (j_.contains(key)) Read(j_.at(key), key, out);
    return *this;
  }

  void Done() const {
    for (const auto& [key, value] : j_.items()) {
      if (!known_.count(key)) throw ConfigError("unknown key '" + key + "' in " + where_);
    }
  }

 private:
  template <typename T>
  void Read(const json& v, const char* key, T* out) const {
    try {
      *out = v.get<T>();
    } catch (const json::exception&) {
      Bad(key);
    }
  }
  void Read(const json& v, const char* key, int* out) const {
    if (!v.is_number_integer()) Bad(key);
    *out = v.get<int>();
  }
  void Read(const json& v, const char* key, double* out) const {
    if (!v.is_number()) Bad(key);
    *out = v.get<double>();
  }
  void Read(const json& v, const char* key, Eigen::Vector2d* out) const {
    std::vector<double> x;
    Read(v, key, &x);
    if (x.size() != 2) Bad(key);
    *out << x[0], x[1];
  }
  [[noreturn]] void Bad(const char* key) const {
    throw ConfigError("bad value for '" + std::string(key) + "' in " + where_);
  }

  const json& j_;
  std::string where_;
  std::set<std::string> known_;
};

void Positive(double v, const char* what) {
  if (!(v > 0.0)) throw ConfigError(std::string(what) + " must be > 0");
}

}  // namespace

std::string ScenarioName(ScenarioId id) {
  switch (id) {
    case ScenarioId::kTeachDemo: return "teach_demo";
    case ScenarioId::kMuscleAddition: return "muscle_addition";
    case ScenarioId::kTableSetting: return "table_setting";
  }
  return "";
}

ScenarioId ScenarioFromName(const std::string& name) {
  for (ScenarioId id : {ScenarioId::kTeachDemo, ScenarioId::kMuscleAddition,
                        ScenarioId::kTableSetting}) {
    if (ScenarioName(id) == name) return id;
  }
  throw ConfigError("unknown scenario '" + name + "'");
}

ScenarioConfig ParseScenarioConfig(const json& j, const std::string& scenario,
                                   const int64_t* seed) {
  ScenarioConfig cfg;
  std::string name;
  json seed_json, plant, base, schema, params;
  Fields(j, "scenario config")("scenario", &name)("seed", &seed_json)("out", &cfg.out)(
      "plant", &plant)("base", &base)("schema", &schema)("params", &params)
      .Done();

  if (!scenario.empty()) {
    if (!name.empty() && name != scenario) {
      throw ConfigError("config is for scenario '" + name + "', not '" + scenario + "'");
    }
    name = scenario;
  }
  if (name.empty()) throw ConfigError("scenario id missing");
  cfg.scenario = ScenarioFromName(name);

  if (seed) {
    if (*seed < 0) throw ConfigError("seed must be >= 0");
    cfg.seed = static_cast<uint64_t>(*seed);
  } else if (seed_json.is_number_unsigned() ||
             (seed_json.is_number_integer() && seed_json.get<int64_t>() >= 0)) {
    cfg.seed = seed_json.get<uint64_t>();
  } else if (seed_json.is_null()) {
    throw ConfigError("seed is mandatory");
  } else {
    throw ConfigError("seed must be a non-negative integer");
  }

  if (!plant.is_null()) {
    ArmPlantFromJson(plant);  // validates keys and values now
    cfg.plant = plant;
  }
  if (!base.is_null()) {
    Fields(base, "base")("a", &cfg.base.a)("b", &cfg.base.b)(
        "wheel_radius", &cfg.base.wheel_radius)
        .Done();
    try {
      cfg.base.Validate();
    } catch (const UsageError& e) {
      throw ConfigError(std::string("base: ") + e.what());
    }
  }
  if (!schema.is_null()) {
    json st, dy;
    Fields(schema, "schema")("static", &st)("dynamic", &dy).Done();
    StaticSchemaParams& s = cfg.static_schema;
    if (!st.is_null()) {
      Fields(st, "static schema")("samples", &s.samples)("epochs", &s.epochs)(
          "regrow_samples", &s.regrow_samples)("regrow_epochs", &s.regrow_epochs)(
          "latent", &s.latent)("hidden", &s.hidden)
          .Done();
    }
    DynamicSchemaParams& d = cfg.dynamic_schema;
    if (!dy.is_null()) {
      Fields(dy, "dynamic schema")("per_object", &d.per_object)("length", &d.length)(
          "epochs", &d.epochs)("hidden", &d.hidden)
          .Done();
    }
    if (s.samples < 1000 || s.regrow_samples < 1000) {
      throw ConfigError("static schema needs >= 1000 samples");
    }
    if (s.epochs < 1 || s.regrow_epochs < 0 || s.latent < 1 || s.hidden < 1) {
      throw ConfigError("static schema sizes must be positive");
    }
    if (d.per_object < 1 || d.length < 20 || d.epochs < 1 || d.hidden < 1) {
      throw ConfigError("dynamic schema needs runs of >= 20 steps and positive sizes");
    }
  }
  if (!params.is_null()) {
    const std::string where = name + " params";
    switch (cfg.scenario) {
      case ScenarioId::kTeachDemo: {
        TeachDemoParams& p = cfg.teach;
        Fields(params, where)("drive_distance", &p.drive_distance)("speed", &p.speed)(
            "reach", &p.reach)("lift", &p.lift)
            .Done();
        Positive(p.speed, "speed");
        break;
      }
      case ScenarioId::kMuscleAddition: {
        MuscleAdditionParams& p = cfg.muscle;
        Fields(params, where)("payload", &p.payload)("posture", &p.posture)(
            "added_moment_arm", &p.added_moment_arm)("w_f", &p.w_f)("relax", &p.relax)
            .Done();
        Positive(p.added_moment_arm, "added_moment_arm");
        if (p.payload < 0.0 || p.w_f < 0.0) {
          throw ConfigError("payload and w_f must be >= 0");
        }
        break;
      }
      case ScenarioId::kTableSetting: {
        TableSettingParams& p = cfg.table;
        Fields(params, where)("objects", &p.objects)("k_step", &p.k_step)(
            "budget", &p.budget)("final_budget", &p.final_budget)
            .Done();
        Positive(p.k_step, "k_step");
        if (p.objects.empty()) throw ConfigError("table_setting needs an object");
        if (p.budget < 0 || p.final_budget < 0) throw ConfigError("budgets must be >= 0");
        break;
      }
    }
  }
  return cfg;
}

json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("'" + path + "' is not JSON: " + e.what());
  }
}

nlohmann::ordered_json ScenarioConfigToJson(const ScenarioConfig& cfg) {
  nlohmann::ordered_json j;
  j["scenario"] = ScenarioName(cfg.scenario);
  j["seed"] = cfg.seed;
  j["out"] = cfg.out;
  j["plant"] = cfg.plant;
  j["base"] = {{"a", cfg.base.a}, {"b", cfg.base.b}, {"wheel_radius", cfg.base.wheel_radius}};
  const StaticSchemaParams& s = cfg.static_schema;
  const DynamicSchemaParams& d = cfg.dynamic_schema;
  j["schema"]["static"] = {{"samples", s.samples},
                           {"epochs", s.epochs},
                           {"regrow_samples", s.regrow_samples},
                           {"regrow_epochs", s.regrow_epochs},
                           {"latent", s.latent},
                           {"hidden", s.hidden}};
  j["schema"]["dynamic"] = {{"per_object", d.per_object},
                            {"length", d.length},
                            {"epochs", d.epochs},
                            {"hidden", d.hidden}};
  nlohmann::ordered_json& p = j["params"];
  switch (cfg.scenario) {
    case ScenarioId::kTeachDemo:
      p["drive_distance"] = cfg.teach.drive_distance;
      p["speed"] = cfg.teach.speed;
      p["reach"] = {cfg.teach.reach[0], cfg.teach.reach[1]};
      p["lift"] = cfg.teach.lift;
      break;
    case ScenarioId::kMuscleAddition:
      p["payload"] = cfg.muscle.payload;
      p["posture"] = {cfg.muscle.posture[0], cfg.muscle.posture[1]};
      p["added_moment_arm"] = cfg.muscle.added_moment_arm;
      p["w_f"] = cfg.muscle.w_f;
      p["relax"] = cfg.muscle.relax;
      break;
    case ScenarioId::kTableSetting:
      p["objects"] = cfg.table.objects;
      p["k_step"] = cfg.table.k_step;
      p["budget"] = cfg.table.budget;
      p["final_budget"] = cfg.table.final_budget;
      break;
  }
  return j;
}

}  // namespace muskwheel
