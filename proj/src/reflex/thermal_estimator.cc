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

#include "muskwheel/reflex/thermal_estimator.h"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "muskwheel/core/errors.h"

namespace muskwheel {

ThermalParams ThermalParams::FromGuess(const std::array<double, 5>& p,
                                       double ambient, double rated) {
  ThermalParams t;
  for (int k = 0; k < 5; ++k) {
    if (!(p[k] > 0.0)) throw UsageError("thermal parameters must be > 0");
    t.log_p[k] = std::log(p[k]);
  }
  t.ambient = ambient;
  t.rated = rated;
  t.c1_est = ambient;
  t.c2_last = ambient;
  t.last_c2_prediction = ambient;
  return t;
}

std::array<double, 5> ThermalParams::P() const {
  std::array<double, 5> p;
  for (int k = 0; k < 5; ++k) p[k] = std::exp(log_p[k]);
  return p;
}

double ThermalParams::CoreRate(double current, double c1, double c2) const {
  const auto p = P();
  return p[0] * (p[4] * current * current - p[2] * (c1 - c2));
}

double ThermalParams::HousingRate(double c1, double c2) const {
  const auto p = P();
  return p[1] * (p[2] * (c1 - c2) - p[3] * (c2 - ambient));
}

ThermalParams ThermalUpdate(const ThermalParams& params, double c2_meas,
                            double current, double dt,
                            const ThermalUpdateOptions& options) {
  if (!(dt > 0.0 && dt <= 1.0)) throw UsageError("dt must be in (0, 1]");
  ThermalParams next = params;
  const auto p = params.P();
  const double c1 = params.c1_est, c2 = params.c2_last;
  const double gap = c1 - c2;
  const double h1 = params.CoreRate(current, c1, c2);
  const double h2 = params.HousingRate(c1, c2);

  // one-step housing prediction and its sensitivity to log P
  const double c2_pred = c2 + dt * h2;
  const double err = c2_pred - c2_meas;
  std::array<double, 5> dh2{};
  dh2[1] = h2;
  dh2[2] = p[1] * p[2] * gap;
  dh2[3] = -p[1] * p[3] * (c2 - params.ambient);
  const double dh2_dc1 = p[1] * p[2];
  std::array<double, 5> phi;
  double phi_sq = 0.0;
  for (int k = 0; k < 5; ++k) {
    phi[k] = options.learn[k]
                 ? dt * (dh2[k] + dh2_dc1 * params.c1_sensitivity[k])
                 : 0.0;
    phi_sq += phi[k] * phi[k];
  }

  // core temperature and its sensitivity advance with the current model
  std::array<double, 5> dh1{};
  dh1[0] = h1;
  dh1[2] = -p[0] * p[2] * gap;
  dh1[4] = p[0] * p[4] * current * current;
  const double dh1_dc1 = -p[0] * p[2];
  for (int k = 0; k < 5; ++k) {
    next.c1_sensitivity[k] = params.c1_sensitivity[k] +
                             dt * (dh1[k] + dh1_dc1 * params.c1_sensitivity[k]);
  }
  next.c1_est = c1 + dt * h1;

  // normalized gradient step on err^2 (the 2 folds into the rate)
  const double gain = options.learning_rate / (1e-6 + phi_sq);
  for (int k = 0; k < 5; ++k) {
    next.log_p[k] -= gain * err * phi[k];
    // keep the parameters in a physically meaningful band
    next.log_p[k] = std::clamp(next.log_p[k], -20.0, 20.0);
  }

  next.c1_est = std::max(next.c1_est, std::min(c2_meas, params.ambient) - 1.0);
  next.c2_last = c2_meas;
  next.last_c2_prediction = c2_pred;
  next.last_error = err;
  next.updates = params.updates + 1;
  return next;
}

namespace {

double PeakCore(const ThermalParams& params, double c2, double horizon,
                double current) {
  const int steps = std::max(50, static_cast<int>(std::ceil(horizon)));
  const double dt = horizon / steps;
  double c1 = params.c1_est, h = c2, peak = -1e300;
  for (int s = 0; s < steps; ++s) {
    const double d1 = params.CoreRate(current, c1, h);
    const double d2 = params.HousingRate(c1, h);
    c1 += dt * d1;
    h += dt * d2;
    peak = std::max(peak, c1);
  }
  return peak;
}

}  // namespace

double ThermalLimit(const ThermalParams& params, double c2, double horizon) {
  if (!(params.rated > params.ambient)) {
    throw UsageError("rated temperature must exceed ambient");
  }
  if (!(horizon > 0.0)) throw UsageError("horizon must be > 0");
  if (PeakCore(params, c2, horizon, 0.0) > params.rated) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (PeakCore(params, c2, horizon, hi) <= params.rated) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) return hi;
  }
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (PeakCore(params, c2, horizon, mid) <= params.rated) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

void WriteThermalCsvHeader(std::ostream& out) {
  out << "time,P1,P2,P3,P4,P5,c1_est,c2,I\n";
}

void AppendThermalCsv(std::ostream& out, double time,
                      const ThermalParams& params, double c2, double current) {
  const auto p = params.P();
  out << time;
  for (double v : p) out << ',' << v;
  out << ',' << params.c1_est << ',' << c2 << ',' << current << '\n';
}

}  // namespace muskwheel
