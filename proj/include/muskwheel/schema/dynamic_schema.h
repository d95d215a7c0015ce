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

#ifndef MUSKWHEEL_SCHEMA_DYNAMIC_SCHEMA_H_
#define MUSKWHEEL_SCHEMA_DYNAMIC_SCHEMA_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "muskwheel/nn/gru.h"

namespace muskwheel {

// One recorded run: observations s (s_dim x (T + 1)) and the controls u
// (u_dim x T) applied between them, in physical units.
struct DynSequence {
  Eigen::MatrixXd s;
  Eigen::MatrixXd u;
  std::string object_id;

  int length() const { return static_cast<int>(u.cols()); }
};

// Recurrent predictor s_{t+1} = s_t + V h_{t+1} + d with
// h_{t+1} = GRU([s_t, u_t, p], h_t), h_0 = 0, in normalized units. The
// parametric bias p is a constant extra input that absorbs the object.
class DynamicsNet {
 public:
  struct Shape {
    int s_dim = 12;
    int u_dim = 3;
    int p_dim = 2;
    int hidden = 32;
  };

  DynamicsNet() = default;
  DynamicsNet(const Shape& shape, uint64_t seed);

  const Shape& shape() const { return shape_; }
  int s_dim() const { return shape_.s_dim; }
  int u_dim() const { return shape_.u_dim; }
  int p_dim() const { return shape_.p_dim; }
  int hidden() const { return shape_.hidden; }

  const nn::Gru& cell() const { return cell_; }
  nn::Gru& cell() { return cell_; }
  const Eigen::MatrixXd& readout() const { return v_; }
  Eigen::MatrixXd& readout() { return v_; }
  const Eigen::VectorXd& readout_bias() const { return d_; }
  Eigen::VectorXd& readout_bias() { return d_; }

  // Per-channel z-score statistics of s and u.
  void FitNormalization(const std::vector<DynSequence>& data);
  const Eigen::VectorXd& s_mean() const { return s_mean_; }
  const Eigen::VectorXd& s_scale() const { return s_scale_; }
  const Eigen::VectorXd& u_mean() const { return u_mean_; }
  const Eigen::VectorXd& u_scale() const { return u_scale_; }
  Eigen::MatrixXd NormalizeS(const Eigen::MatrixXd& s) const;
  Eigen::MatrixXd DenormalizeS(const Eigen::MatrixXd& s) const;
  Eigen::MatrixXd NormalizeU(const Eigen::MatrixXd& u) const;

  std::map<std::string, Eigen::VectorXd>& p_table() { return p_table_; }
  const std::map<std::string, Eigen::VectorXd>& p_table() const {
    return p_table_;
  }

  // FNV-1a over the bytes of every weight (not p, not statistics).
  uint64_t WeightChecksum() const;

  // Same layout as the static schema files; the JSON sidecar also carries
  // the p table keyed by object id.
  void Save(const std::string& path) const;
  static DynamicsNet Load(const std::string& path);

 private:
  Shape shape_;
  nn::Gru cell_;
  Eigen::MatrixXd v_;
  Eigen::VectorXd d_;
  Eigen::VectorXd s_mean_, s_scale_, u_mean_, u_scale_;
  std::map<std::string, Eigen::VectorXd> p_table_;
};

// Autoregressive prediction from s0 under controls u (u_dim x T), physical
// units. Returns s_dim x (T + 1) with s0 first; empty u returns s0 alone.
Eigen::MatrixXd PredictRollout(const DynamicsNet& net, const Eigen::VectorXd& s0,
                               const Eigen::MatrixXd& u, const Eigen::VectorXd& p);

// Teacher-forced one-step predictions of s_1..s_T (physical units).
Eigen::MatrixXd PredictOneStep(const DynamicsNet& net, const DynSequence& seq,
                               const Eigen::VectorXd& p);

// RMSE of teacher-forced one-step predictions in normalized units, with p
// taken from the table entry of each sequence's object.
double OneStepRmse(const DynamicsNet& net, const std::vector<DynSequence>& data);

struct DynTrainOptions {
  int epochs = 400;
  int batch = 16;  // sequences per step
  double lr = 3e-3;
  double lr_final = 2e-4;
  double p_decay = 0.0;  // L2 on the per-sequence biases
  // L2 pull of each sequence's p toward the mean p of its object
  double p_pool = 0.05;
  double p_lr = 100.0;  // > 0: plain gradient steps on p, else Adam with W
  // Teacher-forced steps per training window, cut at a random offset of
  // each sequence and started from a zero hidden state; 0 uses whole
  // sequences. Short windows keep the net from reading the object off the
  // history, so it has to use p.
  int window = 5;
  // Weight and length of a free-running (autoregressive) loss on its own
  // window; weight 0 trains one-step prediction only.
  double rollout_weight = 0.5;
  int rollout_length = 20;
};

struct DynTrainReport {
  std::vector<double> loss_history;  // per epoch
  std::vector<Eigen::VectorXd> sequence_p;  // one per training sequence
};

// Fits normalization, then trains W jointly with one p per sequence;
// the per-object means of p fill the table. Needs >= 2 object ids and
// sequences of >= 20 steps. Throws TrainingError on a non-finite loss.
DynTrainReport TrainDynamics(DynamicsNet* net,
                             const std::vector<DynSequence>& data,
                             uint64_t seed,
                             const DynTrainOptions& options = {});

struct PbUpdateOptions {
  int iters = 20;
  double rate = 0.1;
  int max_halvings = 20;
  double grow = 2.0;  // rate factor after an accepted step
  bool free_run = false;
  // Loss over every sub-window of this many steps, each started from a
  // zero hidden state (match DynTrainOptions::window); 0 uses the whole.
  int chunk = 5;
};

struct PbUpdateResult {
  Eigen::VectorXd p;
  std::vector<double> loss_history;  // starts at the initial p
};

// Gradient descent on p alone over the teacher-forced loss of a window of
// >= 5 steps; the network is not modified. Steps that raise the loss are
// halved, accepted ones grow by `grow`.
PbUpdateResult UpdatePbOnline(const DynamicsNet& net, const DynSequence& window,
                              const Eigen::VectorXd& p0,
                              const PbUpdateOptions& options = {});

// Window prediction loss and its gradient with respect to p; teacher
// forced, or predicted from the first state alone when free_run is set.
double WindowLoss(const DynamicsNet& net, const DynSequence& window,
                  const Eigen::VectorXd& p, Eigen::VectorXd* grad_p,
                  bool free_run = false, int chunk = 0);

struct DynGoal {
  enum class Kind {
    kTipPosition,  // reach `target` at the last step
    kTipSpeed,     // maximize tip speed at the last step
  };
  Kind kind = Kind::kTipPosition;
  Eigen::Vector2d target = Eigen::Vector2d::Zero();
  double weight = 1.0;
};

struct DynControlOptions {
  int horizon = 20;
  int iters = 50;
  double gamma = 0.05;  // step in normalized control units
  int knot_spacing = 5;
  double w_u = 1e-3;  // smoothness on knot differences, normalized units
  int max_halvings = 20;
};

// Control knots every knot_spacing steps, linearly interpolated.
int KnotCount(int horizon, int knot_spacing);
Eigen::MatrixXd ExpandKnots(const Eigen::MatrixXd& knots, int horizon,
                            int knot_spacing);

// Goal loss of the predicted rollout from s0 under the knots plus the
// smoothness term; grad (optional) is with respect to the physical knots.
double ControlLoss(const DynamicsNet& net, const Eigen::VectorXd& s0,
                   const DynGoal& goal, const Eigen::VectorXd& p,
                   const Eigen::MatrixXd& knots,
                   const DynControlOptions& options, Eigen::MatrixXd* grad);

struct DynControlResult {
  Eigen::MatrixXd knots;      // u_dim x KnotCount, physical
  Eigen::MatrixXd u;          // u_dim x horizon, physical
  Eigen::MatrixXd predicted;  // s_dim x (horizon + 1)
  std::vector<double> loss_history;  // accepted iterates, starts at init
};

// Projected gradient descent on the knots within [u_lower, u_upper]
// (per control channel), backtracking on a loss increase. Starts from
// `init` when given, otherwise from knots equal to the bound midpoints.
DynControlResult OptimizeControls(const DynamicsNet& net,
                                  const Eigen::VectorXd& s0,
                                  const DynGoal& goal, const Eigen::VectorXd& p,
                                  const Eigen::VectorXd& u_lower,
                                  const Eigen::VectorXd& u_upper,
                                  const std::optional<Eigen::MatrixXd>& init,
                                  const DynControlOptions& options = {});

}  // namespace muskwheel

#endif  // MUSKWHEEL_SCHEMA_DYNAMIC_SCHEMA_H_
