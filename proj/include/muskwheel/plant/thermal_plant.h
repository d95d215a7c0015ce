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

#ifndef MUSKWHEEL_PLANT_THERMAL_PLANT_H_
#define MUSKWHEEL_PLANT_THERMAL_PLANT_H_

#include <array>

namespace muskwheel {

// Ground-truth two-resistor motor thermal model:
//
//   C_core    dc1/dt = R_w I^2 - G_ch (c1 - c2)
//   C_housing dc2/dt = G_ch (c1 - c2) - G_ha (c2 - ambient)
struct ThermalPlant {
  double core_capacity = 20.0;           // J/K
  double housing_capacity = 200.0;       // J/K
  double core_housing_conductance = 1.0; // W/K
  double housing_ambient_conductance = 0.2;  // W/K
  double winding_resistance = 1.0;       // Ohm
  double ambient = 25.0;                 // deg C

  void Validate() const;

  // Steady-state (c1, c2) for a constant current.
  std::array<double, 2> SteadyState(double current) const;
};

struct Temperatures {
  double core;
  double housing;
};

// Explicit Euler step; dt in (0, 1] s.
Temperatures ThermalStep(const ThermalPlant& plant, const Temperatures& t,
                         double current, double dt);

}  // namespace muskwheel

#endif  // MUSKWHEEL_PLANT_THERMAL_PLANT_H_
