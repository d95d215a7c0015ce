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

#ifndef MUSKWHEEL_REFLEX_THERMAL_ESTIMATOR_H_
#define MUSKWHEEL_REFLEX_THERMAL_ESTIMATOR_H_

#include <array>
#include <iosfwd>

namespace muskwheel {

// Learned two-resistor thermal model with P = (1/C_core, 1/C_housing,
// G_core_housing, G_housing_ambient, R_winding):
//
//   dc1/dt = h1(I, c1, c2) = P1 (P5 I^2 - P3 (c1 - c2))
//   dc2/dt = h2(c1, c2)    = P2 (P3 (c1 - c2) - P4 (c2 - ambient))
//
// P is stored as log P so it stays positive under any update. The core
// temperature c1 is never measured; it is integrated through h1 while the
// housing temperature c2 drives the parameter updates.
struct ThermalParams {
  std::array<double, 5> log_p{};
  double c1_est = 25.0;
  double c2_last = 25.0;  // last housing measurement
  double rated = 100.0;
  double ambient = 25.0;

  // d c1_est / d log P, carried forward so the c2 loss reaches P1 and P5
  std::array<double, 5> c1_sensitivity{};
  int updates = 0;
  double last_c2_prediction = 25.0;
  double last_error = 0.0;

  // Starts at thermal equilibrium (c1 = c2 = ambient) from a parameter guess.
  static ThermalParams FromGuess(const std::array<double, 5>& p, double ambient,
                                 double rated);

  std::array<double, 5> P() const;
  double CoreRate(double current, double c1, double c2) const;
  double HousingRate(double c1, double c2) const;
};

struct ThermalUpdateOptions {
  // fraction of the prediction error removed per step (normalized LMS)
  double learning_rate = 0.05;
  // Which entries of P adapt. Housing-only measurements pin down three
  // combinations of the five parameters (the gain and both poles of the
  // I^2 -> c2 response); the core capacity and winding resistance are held
  // at their nominal values so that c1 becomes observable.
  std::array<bool, 5> learn = {false, true, true, true, false};
};

// Predicts c2 one step ahead, takes one normalized gradient step on
// (c2_pred - c2_meas)^2 in log-parameter space and advances c1_est.
// dt in (0, 1] s.
ThermalParams ThermalUpdate(const ThermalParams& params, double c2_meas,
                            double current, double dt,
                            const ThermalUpdateOptions& options = {});

// Largest constant current keeping the learned core temperature at or below
// the rated value over `horizon` seconds, starting from (c1_est, c2).
double ThermalLimit(const ThermalParams& params, double c2, double horizon);

// CSV snapshot log: time, P1..P5, c1_est, c2, I.
void WriteThermalCsvHeader(std::ostream& out);
void AppendThermalCsv(std::ostream& out, double time,
                      const ThermalParams& params, double c2, double current);

}  // namespace muskwheel

#endif  // MUSKWHEEL_REFLEX_THERMAL_ESTIMATOR_H_
