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


#include "muskwheel/plant/plant_config.h"

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "muskwheel/core/errors.h"

namespace muskwheel {

namespace {

using nlohmann::json;

void CheckKeys(const json& j, const std::set<std::string>& known,
               const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T Get(const json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + key + "' in " + where);
  }
}

Eigen::VectorXd Vec(const json& j, const std::string& key, const std::string& where) {
  const auto v = Get<std::vector<double>>(j, key, where);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd Mat(const json& j, const std::string& key, const std::string& where) {
  const auto rows = Get<std::vector<std::vector<double>>>(j, key, where);
  const size_t cols = rows.empty() ? 0 : rows[0].size();
  Eigen::MatrixXd m(rows.size(), cols);
  for (size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw ConfigError("ragged matrix '" + key + "' in " + where);
    for (size_t c = 0; c < cols; ++c) m(r, c) = rows[r][c];
  }
  return m;
}

json VecJson(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

json MatJson(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(VecJson(m.row(r).transpose()));
  return rows;
}

template <typename F>
void Validated(F&& validate, const std::string& where) {
  try {
    validate();
  } catch (const UsageError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace

ArmPlant ArmPlantFromJson(const json& j, const ArmPlant& base) {
  const std::string where = "arm plant";
  CheckKeys(j,
            {"n_joints", "n_muscles", "moment_arms", "moment_arm_slopes", "elastic_k",
             "rest_lengths", "link_lengths", "link_masses", "damping", "joint_lower",
             "joint_upper", "payload_mass", "gravity"},
            where);
  ArmPlant p = base;
  if (j.contains("n_joints")) p.n_joints = Get<int>(j, "n_joints", where);
  if (j.contains("n_muscles")) p.n_muscles = Get<int>(j, "n_muscles", where);
  if (j.contains("moment_arms")) p.moment_arms = Mat(j, "moment_arms", where);
  if (j.contains("moment_arm_slopes")) {
    p.moment_arm_slopes = Mat(j, "moment_arm_slopes", where);
  } else if (p.moment_arm_slopes.rows() != p.moment_arms.rows() ||
             p.moment_arm_slopes.cols() != p.moment_arms.cols()) {
    p.moment_arm_slopes = Eigen::MatrixXd::Zero(p.moment_arms.rows(), p.moment_arms.cols());
  }
  if (j.contains("elastic_k")) p.elastic_k = Vec(j, "elastic_k", where);
  if (j.contains("rest_lengths")) p.rest_lengths = Vec(j, "rest_lengths", where);
  if (j.contains("link_lengths")) p.link_lengths = Vec(j, "link_lengths", where);
  if (j.contains("link_masses")) p.link_masses = Vec(j, "link_masses", where);
  if (j.contains("damping")) p.damping = Vec(j, "damping", where);
  if (j.contains("joint_lower")) p.joint_lower = Vec(j, "joint_lower", where);
  if (j.contains("joint_upper")) p.joint_upper = Vec(j, "joint_upper", where);
  if (j.contains("payload_mass")) p.payload_mass = Get<double>(j, "payload_mass", where);
  if (j.contains("gravity")) p.gravity = Get<double>(j, "gravity", where);
  Validated([&] { p.Validate(); }, where);
  return p;
}

ThermalPlant ThermalPlantFromJson(const json& j, const ThermalPlant& base) {
  const std::string where = "thermal plant";
  CheckKeys(j, {"true_params", "ambient"}, where);
  ThermalPlant p = base;
  if (j.contains("true_params")) {
    const Eigen::VectorXd v = Vec(j, "true_params", where);
    if (v.size() != 5) throw ConfigError("true_params needs 5 entries");
    p.core_capacity = v[0];
    p.housing_capacity = v[1];
    p.core_housing_conductance = v[2];
    p.housing_ambient_conductance = v[3];
    p.winding_resistance = v[4];
  }
  if (j.contains("ambient")) p.ambient = Get<double>(j, "ambient", where);
  Validated([&] { p.Validate(); }, where);
  return p;
}

FlexibleObject FlexibleObjectFromJson(const json& j, const FlexibleObject& base) {
  const std::string where = "flexible object";
  CheckKeys(j, {"kind", "lengths", "masses", "damping", "attach_hand"}, where);
  FlexibleObject o = base;
  if (j.contains("kind")) {
    const std::string kind = Get<std::string>(j, "kind", where);
    if (kind == "none") {
      o.kind = FlexibleObject::Kind::kNone;
    } else if (kind == "pendulum_mass") {
      o.kind = FlexibleObject::Kind::kPendulumMass;
    } else if (kind == "two_mass_chain") {
      o.kind = FlexibleObject::Kind::kTwoMassChain;
    } else {
      throw ConfigError("unknown object kind '" + kind + "'");
    }
  }
  if (j.contains("lengths")) o.lengths = Get<std::vector<double>>(j, "lengths", where);
  if (j.contains("masses")) o.masses = Get<std::vector<double>>(j, "masses", where);
  if (j.contains("damping")) o.damping = Get<double>(j, "damping", where);
  if (j.contains("attach_hand")) o.attach_hand = Get<bool>(j, "attach_hand", where);
  Validated([&] { o.Validate(); }, where);
  return o;
}

nlohmann::ordered_json ArmPlantToJson(const ArmPlant& p) {
  nlohmann::ordered_json j;
  j["n_joints"] = p.n_joints;
  j["n_muscles"] = p.n_muscles;
  j["moment_arms"] = MatJson(p.moment_arms);
  j["moment_arm_slopes"] = MatJson(p.moment_arm_slopes);
  j["elastic_k"] = VecJson(p.elastic_k);
  j["rest_lengths"] = VecJson(p.rest_lengths);
  j["link_lengths"] = VecJson(p.link_lengths);
  j["link_masses"] = VecJson(p.link_masses);
  j["damping"] = VecJson(p.damping);
  j["joint_lower"] = VecJson(p.joint_lower);
  j["joint_upper"] = VecJson(p.joint_upper);
  j["payload_mass"] = p.payload_mass;
  j["gravity"] = p.gravity;
  return j;
}

nlohmann::ordered_json ThermalPlantToJson(const ThermalPlant& p) {
  nlohmann::ordered_json j;
  j["true_params"] = {p.core_capacity, p.housing_capacity, p.core_housing_conductance,
                      p.housing_ambient_conductance, p.winding_resistance};
  j["ambient"] = p.ambient;
  return j;
}

nlohmann::ordered_json FlexibleObjectToJson(const FlexibleObject& o) {
  nlohmann::ordered_json j;
  switch (o.kind) {
    case FlexibleObject::Kind::kNone: j["kind"] = "none"; break;
    case FlexibleObject::Kind::kPendulumMass: j["kind"] = "pendulum_mass"; break;
    case FlexibleObject::Kind::kTwoMassChain: j["kind"] = "two_mass_chain"; break;
  }
  j["lengths"] = o.lengths;
  j["masses"] = o.masses;
  j["damping"] = o.damping;
  j["attach_hand"] = o.attach_hand;
  return j;
}

PlantConfig PlantConfigFromJson(const json& j) {
  CheckKeys(j, {"arm", "thermal", "object"}, "plant config");
  PlantConfig c;
  if (j.contains("arm")) c.arm = ArmPlantFromJson(j.at("arm"), c.arm);
  if (j.contains("thermal")) c.thermal = ThermalPlantFromJson(j.at("thermal"), c.thermal);
  if (j.contains("object")) c.object = FlexibleObjectFromJson(j.at("object"), c.object);
  return c;
}

PlantConfig LoadPlantConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open plant config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError("plant config '" + path + "' is not JSON: " + e.what());
  }
  return PlantConfigFromJson(j);
}

}  // namespace muskwheel
