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


#ifndef MUSKWHEEL_PLANT_PLANT_CONFIG_H_
#define MUSKWHEEL_PLANT_PLANT_CONFIG_H_

#include <string>

#include "json.hpp"
#include "muskwheel/plant/arm_plant.h"
#include "muskwheel/plant/dynamics.h"
#include "muskwheel/plant/thermal_plant.h"

namespace muskwheel {

// JSON forms of the plant types. Keys are the struct field names (matrices
// as arrays of rows); a key that is absent keeps the value in `base`, an
// unknown key or a wrong type is a ConfigError. The results are validated.
//
// The thermal plant uses "true_params": [C_core, C_housing, G_core_housing,
// G_housing_ambient, R_winding] and "ambient". Object kinds are "none",
// "pendulum_mass" and "two_mass_chain".
ArmPlant ArmPlantFromJson(const nlohmann::json& j,
                          const ArmPlant& base = ArmPlant::Default());
ThermalPlant ThermalPlantFromJson(const nlohmann::json& j,
                                  const ThermalPlant& base = {});
FlexibleObject FlexibleObjectFromJson(const nlohmann::json& j,
                                      const FlexibleObject& base = {});

nlohmann::ordered_json ArmPlantToJson(const ArmPlant& plant);
nlohmann::ordered_json ThermalPlantToJson(const ThermalPlant& plant);
nlohmann::ordered_json FlexibleObjectToJson(const FlexibleObject& obj);

struct PlantConfig {
  ArmPlant arm = ArmPlant::Default();
  ThermalPlant thermal;
  FlexibleObject object;
};

// {"arm": {...}, "thermal": {...}, "object": {...}}, every section
// optional. Throws FormatError when the file is missing or not JSON.
PlantConfig PlantConfigFromJson(const nlohmann::json& j);
PlantConfig LoadPlantConfig(const std::string& path);

}  // namespace muskwheel

#endif  // MUSKWHEEL_PLANT_PLANT_CONFIG_H_
