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

#ifndef MUSKWHEEL_SCHEMA_STATIC_SCHEMA_H_
#define MUSKWHEEL_SCHEMA_STATIC_SCHEMA_H_

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "muskwheel/nn/mlp.h"
#include "muskwheel/plant/arm_plant.h"

namespace muskwheel {

// Which of (theta, f, l) are provided; 1 = present, 0 = masked.
using Mask = std::array<int, 3>;

inline constexpr Mask kMaskNoLength = {1, 1, 0};   // (theta, f) -> l
inline constexpr Mask kMaskNoAngle = {0, 1, 1};    // (f, l) -> theta
inline constexpr Mask kMaskNoTension = {1, 0, 1};  // (theta, l) -> f
inline constexpr std::array<Mask, 3> kTrainingMasks = {
    kMaskNoLength, kMaskNoAngle, kMaskNoTension};

bool IsTrainingMask(const Mask& m);

struct SensorTriple {
  Eigen::VectorXd theta;  // rad
  Eigen::VectorXd f;      // N
  Eigen::VectorXd l;      // m, actuator length
  Mask mask = {1, 1, 1};
};

struct StaticPrediction {
  Eigen::VectorXd theta;
  Eigen::VectorXd f;
  Eigen::VectorXd l;
};

// Masked autoencoder over (theta, f, l). The input is the z-scored triple
// with masked blocks zeroed plus the three mask bits; the output is the
// full z-scored triple. Normalization statistics are set once from the
// first dataset and frozen thereafter.
class StaticNet {
 public:
  struct Shape {
    int n_joints = 2;
    int n_muscles = 4;
    int latent = 8;
    int hidden = 64;
  };

  StaticNet() = default;
  StaticNet(const Shape& shape, uint64_t seed);

  const Shape& shape() const { return shape_; }
  int n_joints() const { return shape_.n_joints; }
  int n_muscles() const { return shape_.n_muscles; }
  int input_dim() const { return shape_.n_joints + 2 * shape_.n_muscles + 3; }
  int output_dim() const { return shape_.n_joints + 2 * shape_.n_muscles; }

  const nn::Mlp& encoder() const { return encoder_; }
  const nn::Mlp& decoder() const { return decoder_; }
  nn::Mlp& encoder() { return encoder_; }
  nn::Mlp& decoder() { return decoder_; }

  // Per-channel z-score of [theta, f, l].
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& scale() const { return scale_; }
  // Fills statistics of every channel not yet fixed; fixed ones stay.
  void FitNormalization(const std::vector<SensorTriple>& data);
  bool normalized() const;

  Eigen::VectorXd NetworkInput(const SensorTriple& t) const;
  Eigen::VectorXd NormalizedTarget(const SensorTriple& t) const;
  StaticPrediction Denormalize(const Eigen::VectorXd& y) const;

  // Encode and Complete throw UsageError for masks other than the three
  // training masks.
  Eigen::VectorXd Encode(const SensorTriple& t) const;
  StaticPrediction Decode(const Eigen::VectorXd& z) const;

  StaticPrediction Complete(const SensorTriple& t) const;

  // Enlarged copy for n_new extra muscles. Old weights are copied, new
  // input columns and output rows drawn at small scale. Old-channel outputs
  // are bit-identical to this net's while the new channels are fed zeros.
  StaticNet Grow(int n_new_muscles, uint64_t seed) const;

  // Flat binary weights (see README) plus a JSON sidecar `path + ".json"`
  // holding normalization statistics.
  void Save(const std::string& path) const;
  static StaticNet Load(const std::string& path);

 private:
  Shape shape_;
  nn::Mlp encoder_;
  nn::Mlp decoder_;
  Eigen::VectorXd mean_;
  Eigen::VectorXd scale_;
  std::vector<bool> fixed_;  // channel statistics frozen
};

// Equilibrium triples of `plant`: random posture, random per-muscle
// tension floors and random load-sharing weights give a tension
// allocation through the holding QP, whose length command is then settled
// by the quasi-static solver.
struct SamplerOptions {
  double floor_min = 1.0;    // N
  double floor_max = 25.0;   // N
  double limit_margin = 0.05;  // rad kept away from joint limits
  double extra_hand_mass = 0.0;
};
std::vector<SensorTriple> SampleEquilibria(const ArmPlant& plant, int n,
                                           uint64_t seed,
                                           const SamplerOptions& options = {});

struct StaticTrainOptions {
  int epochs = 120;
  int batch = 64;
  double lr = 3e-3;
  double lr_final = 1e-4;
  double holdout = 0.1;
  double latent_noise = 0.0;
  SamplerOptions sampler;
};

struct MaskedRmse {
  double theta = 0.0;  // rad, from (f, l)
  double f = 0.0;      // N, from (theta, l)
  double l = 0.0;      // m, from (theta, f)
  // Per block (theta, f, l), normalized units: error when the block is
  // provided and must be reproduced, and when it is masked and predicted.
  std::array<double, 3> reproduced{};
  std::array<double, 3> predicted{};
};

struct StaticTrainReport {
  std::vector<double> loss_history;  // per epoch, normalized MSE
  MaskedRmse holdout;
  std::vector<SensorTriple> train_set;
  std::vector<SensorTriple> holdout_set;
};

MaskedRmse EvaluateMasked(const StaticNet& net,
                          const std::vector<SensorTriple>& data);

// Mean normalized reconstruction MSE over all three masks.
double ReconstructionLoss(const StaticNet& net,
                          const std::vector<SensorTriple>& data);

// Samples n_samples equilibria of `plant` (n_samples >= 1000), fits
// normalization for unfixed channels and trains with all three masks per
// sample. Throws TrainingError on a non-finite loss.
StaticTrainReport TrainInitial(StaticNet* net, const ArmPlant& plant,
                               int n_samples, uint64_t seed,
                               const StaticTrainOptions& options = {});

// Trains on a given dataset (all three masks per sample).
std::vector<double> TrainOnData(StaticNet* net,
                                const std::vector<SensorTriple>& data,
                                uint64_t seed,
                                const StaticTrainOptions& options);

struct OnlineOptions {
  int steps = 10;
  double lr = 0.01;  // plain gradient descent
};

// A few full-batch gradient steps on measured triples (every training
// mask per sample). Returns the parameter change norm.
double TrainOnline(StaticNet* net, const std::vector<SensorTriple>& batch,
                   const OnlineOptions& options = {});

struct ControlOptions {
  int iters = 50;
  double step = 0.05;
  double w_f = 1e-4;   // 1/N^2
  double w_k = 1e-2;   // (rad/(N m))^2
  int max_halvings = 30;
  // Read the final length command back through the (theta, f) -> l mask at
  // theta_ref and the optimized tensions. The latent optimum may decode to
  // a slightly inconsistent triple; this keeps the command on the learned
  // equilibrium manifold.
  bool length_readout = true;
};

struct ControlResult {
  Eigen::VectorXd l_ref;
  StaticPrediction prediction;
  Eigen::VectorXd z;
  std::vector<double> loss_history;  // accepted iterates, starts at init
};

// Loss of a latent point and its gradient. k_ref (per-joint diagonal
// stiffness target, N m/rad) is optional; stiffness is computed from the
// decoded tensions and the plant geometry at theta_ref.
double LatentLoss(const StaticNet& net, const ArmPlant& geometry,
                  const Eigen::VectorXd& theta_ref,
                  const std::optional<Eigen::VectorXd>& k_ref,
                  const Eigen::VectorXd& z, const ControlOptions& options,
                  Eigen::VectorXd* grad);

// Diagonal of G^T diag(2 sqrt(k f)) G used by the control loss.
Eigen::VectorXd PredictedStiffness(const ArmPlant& geometry,
                                   const Eigen::VectorXd& theta_ref,
                                   const Eigen::VectorXd& f);

// Gradient descent on the latent variable starting from the encoding of
// `current` (a fully observed triple is encoded through the (theta, f)
// mask); a step that raises the loss is halved and retried. The loss
// history covers the latent iterations only.
ControlResult SolveControl(const StaticNet& net, const ArmPlant& geometry,
                           const Eigen::VectorXd& theta_ref,
                           const std::optional<Eigen::VectorXd>& k_ref,
                           const SensorTriple& current,
                           const ControlOptions& options = {});

}  // namespace muskwheel

#endif  // MUSKWHEEL_SCHEMA_STATIC_SCHEMA_H_
