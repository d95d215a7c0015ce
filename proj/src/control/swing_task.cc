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


#include "muskwheel/control/swing_task.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "muskwheel/core/errors.h"

namespace muskwheel {

SwingTask SwingTask::Default() {
  SwingTask task;
  task.plant = ArmPlant::Default();
  task.plant.link_masses << 1.0, 0.8;
  task.plant.elastic_k.setConstant(2e4);
  task.plant.damping << 0.1, 0.05;
  task.rig.actuator_speed = 0.1;
  task.rig.marker_distance = 0.2;
  task.objects = {{"short", 0.2, 0.2, 0.05}, {"long", 0.4, 0.2, 0.05}};
  task.theta0 = Eigen::VectorXd::Zero(task.plant.n_joints);
  return task;
}

const SwingObject& SwingTask::Object(const std::string& id) const {
  for (const SwingObject& o : objects) {
    if (o.id == id) return o;
  }
  throw UsageError("unknown swing object '" + id + "'");
}

ArmRig SwingTask::MakeRig(const std::string& id) const {
  const SwingObject& o = Object(id);
  return ArmRig(plant, FlexibleObject::Pendulum(o.length, o.mass, o.damping),
                rig);
}

Eigen::VectorXd SwingTask::u_lower() const {
  Eigen::VectorXd u(plant.n_joints + 1);
  u.head(plant.n_joints).setConstant(-theta_max);
  u[plant.n_joints] = k_min;
  return u;
}

Eigen::VectorXd SwingTask::u_upper() const {
  Eigen::VectorXd u(plant.n_joints + 1);
  u.head(plant.n_joints).setConstant(theta_max);
  u[plant.n_joints] = k_max;
  return u;
}

Eigen::MatrixXd RandomKnots(std::mt19937_64* rng, int count,
                            const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper, double hold) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const int dim = static_cast<int>(lower.size());
  Eigen::MatrixXd knots(dim, count);
  const bool bang = u01(*rng) < 0.5;
  for (int j = 0; j < count; ++j) {
    for (int c = 0; c < dim; ++c) {
      double a = u01(*rng);
      // the last channel is stiffness, never bang-bang
      if (bang && c + 1 < dim) a = a < 0.5 ? 0.05 * a : 1.0 - 0.05 * (1.0 - a);
      knots(c, j) = lower[c] + (upper[c] - lower[c]) * a;
      if (bang && c + 1 < dim && j > 0 && u01(*rng) < hold) knots(c, j) = knots(c, j - 1);
    }
  }
  return knots;
}

std::vector<DynSequence> GenerateSwingData(const SwingTask& task,
                                           int per_object, int length,
                                           uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<DynSequence> data;
  const Eigen::VectorXd lo = task.u_lower(), hi = task.u_upper();
  for (const SwingObject& o : task.objects) {
    ArmRig rig = task.MakeRig(o.id);
    for (int i = 0; i < per_object; ++i) {
      const Eigen::MatrixXd knots = RandomKnots(
          &rng, KnotCount(length, task.knot_spacing), lo, hi, task.data_hold);
      Episode ep = RunKnots(task, &rig, knots, length);
      data.push_back({std::move(ep.s), std::move(ep.u), o.id});
    }
  }
  return data;
}

Episode RunKnots(const SwingTask& task, ArmRig* rig, const Eigen::MatrixXd& knots,
                 int horizon) {
  return RunEpisode(rig, task.theta0, task.k0,
                    ExpandKnots(knots, horizon, task.knot_spacing));
}

DynControlResult PlanSwing(const DynamicsNet& net, const SwingTask& task,
                           const Eigen::VectorXd& s0, const DynGoal& goal,
                           const Eigen::VectorXd& p,
                           const Eigen::VectorXd& u_lower,
                           const Eigen::VectorXd& u_upper,
                           const SwingPlanOptions& options) {
  if (options.samples < 1 || options.starts < 1) {
    throw UsageError("swing planning needs samples and starts");
  }
  DynControlOptions co = options.control;
  co.horizon = options.horizon;
  co.knot_spacing = task.knot_spacing;
  std::mt19937_64 rng(options.seed);
  std::vector<std::pair<double, Eigen::MatrixXd>> scored;
  for (int i = 0; i < options.samples; ++i) {
    Eigen::MatrixXd knots = RandomKnots(
        &rng, KnotCount(co.horizon, co.knot_spacing), u_lower, u_upper);
    const double loss = ControlLoss(net, s0, goal, p, knots, co, nullptr);
    scored.emplace_back(loss, std::move(knots));
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  DynControlResult best;
  double best_loss = 0.0;
  const int starts = std::min<int>(options.starts, scored.size());
  for (int i = 0; i < starts; ++i) {
    DynControlResult r = OptimizeControls(net, s0, goal, p, u_lower, u_upper,
                                          scored[i].second, co);
    if (i == 0 || r.loss_history.back() < best_loss) {
      best_loss = r.loss_history.back();
      best = std::move(r);
    }
  }
  return best;
}

Eigen::MatrixXd RefineOnPlant(const DynamicsNet& net, const SwingTask& task,
                              ArmRig* rig, const Eigen::VectorXd& p,
                              const Eigen::MatrixXd& knots, bool vary_stiffness,
                              int horizon, const RefineOptions& options,
                              double* peak) {
  const int dim = static_cast<int>(knots.rows());
  Eigen::VectorXd lo = task.u_lower(), hi = task.u_upper();
  if (!vary_stiffness) lo[dim - 1] = hi[dim - 1] = knots(dim - 1, 0);
  auto project = [&](Eigen::MatrixXd k) {
    for (int j = 0; j < k.cols(); ++j) k.col(j) = k.col(j).cwiseMax(lo).cwiseMin(hi);
    return k;
  };
  DynGoal goal;
  goal.kind = DynGoal::Kind::kTipSpeed;
  DynControlOptions co;
  co.horizon = horizon;
  co.knot_spacing = task.knot_spacing;

  Eigen::MatrixXd x = project(knots);
  Episode ep = RunKnots(task, rig, x, horizon);
  double best = PeakTipSpeed(ep.s);
  const Eigen::VectorXd s0 = ep.s.col(0);
  double step = options.step, probe = options.probe;
  int used = 0;
  while (used < options.budget) {
    if (step > 1e-3) {
      Eigen::MatrixXd g;
      ControlLoss(net, s0, goal, p, x, co, &g);
      if (!vary_stiffness) g.row(dim - 1).setZero();
      for (int j = 0; j < x.cols(); ++j) {
        for (int c = 0; c < dim; ++c) {
          if ((x(c, j) <= lo[c] && g(c, j) > 0.0) ||
              (x(c, j) >= hi[c] && g(c, j) < 0.0)) {
            g(c, j) = 0.0;
          }
        }
      }
      // steepest descent in normalized control units
      const Eigen::MatrixXd gn = g.array().colwise() * net.u_scale().array();
      if (gn.norm() < 1e-12) {
        step = 0.0;
        continue;
      }
      const Eigen::MatrixXd dir =
          (gn / -gn.norm()).array().colwise() * net.u_scale().array();
      const Eigen::MatrixXd trial = project(x + step * dir);
      const double v = PeakTipSpeed(RunKnots(task, rig, trial, horizon).s);
      ++used;
      if (v > best) {
        x = trial;
        best = v;
        step *= 1.5;
      } else {
        step *= 0.5;
      }
      continue;
    }
    bool improved = false;
    for (int j = 0; j < x.cols() && !improved && used < options.budget; ++j) {
      for (int c = 0; c < dim && !improved && used < options.budget; ++c) {
        for (double sign : {1.0, -1.0}) {
          Eigen::MatrixXd trial = x;
          trial(c, j) += sign * probe * net.u_scale()[c];
          trial = project(trial);
          if (trial == x) continue;
          const double v = PeakTipSpeed(RunKnots(task, rig, trial, horizon).s);
          ++used;
          if (v > best) {
            x = trial;
            best = v;
            improved = true;
            break;
          }
          if (used >= options.budget) break;
        }
      }
    }
    if (improved) {
      step = 0.05;
    } else {
      probe *= 0.5;
      if (probe < 1e-4) break;
    }
  }
  if (peak) *peak = best;
  return x;
}

StiffnessComparison CompareStiffness(const DynamicsNet& net,
                                     const SwingTask& task,
                                     const std::string& object_id,
                                     const StiffnessSweepOptions& options) {
  if (options.k_step <= 0.0) throw UsageError("k_step must be positive");
  ArmRig rig = task.MakeRig(object_id);
  rig.Reset(task.theta0, task.k0);
  const Eigen::VectorXd s0 = rig.Observe();
  const Eigen::VectorXd& p = net.p_table().at(object_id);
  const int horizon = options.plan.horizon;
  DynGoal goal;
  goal.kind = DynGoal::Kind::kTipSpeed;

  StiffnessComparison out;
  const int ks = static_cast<int>(
      std::floor((task.k_max - task.k_min) / options.k_step + 1e-9)) + 1;
  for (int i = 0; i < ks; ++i) {
    const double k = task.k_min + i * options.k_step;
    Eigen::VectorXd lo = task.u_lower(), hi = task.u_upper();
    lo[lo.size() - 1] = hi[hi.size() - 1] = k;
    const DynControlResult plan =
        PlanSwing(net, task, s0, goal, p, lo, hi, options.plan);
    double peak = 0.0;
    const Eigen::MatrixXd knots = RefineOnPlant(
        net, task, &rig, p, plan.knots, false, horizon, options.refine, &peak);
    out.fixed_k.push_back(k);
    out.fixed_peak.push_back(peak);
    if (i == 0 || peak > out.best_fixed_peak) {
      out.best_fixed_peak = peak;
      out.best_fixed_k = k;
      out.best_fixed_knots = knots;
    }
  }
  RefineOptions polish = options.refine;
  polish.budget = options.final_budget;
  const Eigen::MatrixXd start = out.best_fixed_knots;
  out.best_fixed_knots = RefineOnPlant(net, task, &rig, p, start, false, horizon,
                                       polish, &out.best_fixed_peak);
  // the varying arm continues from the converged constant-k optimum
  out.variable_knots = RefineOnPlant(net, task, &rig, p, out.best_fixed_knots,
                                     true, horizon, polish, &out.variable_peak);
  return out;
}

}  // namespace muskwheel
