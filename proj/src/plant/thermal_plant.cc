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

#include "muskwheel/plant/thermal_plant.h"

#include <cmath>

#include "muskwheel/core/errors.h"

namespace muskwheel {

void ThermalPlant::Validate() const {
  if (!(core_capacity > 0 && housing_capacity > 0 &&
        core_housing_conductance > 0 && housing_ambient_conductance > 0 &&
        winding_resistance > 0)) {
    throw UsageError("thermal plant parameters must be strictly positive");
  }
}

std::array<double, 2> ThermalPlant::SteadyState(double current) const {
  const double heat = winding_resistance * current * current;
  const double c2 = ambient + heat / housing_ambient_conductance;
  const double c1 = c2 + heat / core_housing_conductance;
  return {c1, c2};
}

Temperatures ThermalStep(const ThermalPlant& plant, const Temperatures& t,
                         double current, double dt) {
  if (!(dt > 0.0 && dt <= 1.0)) throw UsageError("dt must be in (0, 1]");
  const double flow = plant.core_housing_conductance * (t.core - t.housing);
  const double loss = plant.housing_ambient_conductance * (t.housing - plant.ambient);
  Temperatures next;
  next.core = t.core + dt * (plant.winding_resistance * current * current - flow) /
                           plant.core_capacity;
  next.housing = t.housing + dt * (flow - loss) / plant.housing_capacity;
  if (!std::isfinite(next.core) || !std::isfinite(next.housing)) {
    throw IntegrationError("non-finite temperature");
  }
  return next;
}

}  // namespace muskwheel
