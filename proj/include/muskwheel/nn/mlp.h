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

#ifndef MUSKWHEEL_NN_MLP_H_
#define MUSKWHEEL_NN_MLP_H_

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace muskwheel::nn {

enum class Activation { kTanh, kLinear };

struct Dense {
  Eigen::MatrixXd w;  // out x in
  Eigen::VectorXd b;
  Activation act = Activation::kTanh;

  int in() const { return static_cast<int>(w.cols()); }
  int out() const { return static_cast<int>(w.rows()); }
};

// Cached activations of a batched forward pass (one column per sample).
struct MlpTape {
  std::vector<Eigen::MatrixXd> inputs;   // input of every layer
  std::vector<Eigen::MatrixXd> outputs;  // post-activation output
};

struct MlpGrad {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;
  void SetZero();
};

// Fully connected network, tanh hidden layers and a linear output layer.
class Mlp {
 public:
  Mlp() = default;
  // sizes = {in, hidden..., out}; Xavier-uniform weights, zero biases.
  Mlp(const std::vector<int>& sizes, std::mt19937_64& rng);

  int in() const { return layers_.front().in(); }
  int out() const { return layers_.back().out(); }
  const std::vector<Dense>& layers() const { return layers_; }
  std::vector<Dense>& layers() { return layers_; }

  // Batched pass for training; columns are samples.
  Eigen::MatrixXd Forward(const Eigen::MatrixXd& x, MlpTape* tape) const;

  // Accumulates parameter gradients into `grad` and returns dL/dx.
  Eigen::MatrixXd Backward(const MlpTape& tape, const Eigen::MatrixXd& dy,
                           MlpGrad* grad) const;

  // Single-sample inference. Accumulates every dense layer input by input
  // in a fixed order, so zero-valued inputs contribute exact zeros and
  // inserting zero-fed columns leaves results bit-identical.
  Eigen::VectorXd Evaluate(const Eigen::VectorXd& x) const;

  // Same order as Evaluate; records per-layer outputs for VectorJacobian.
  Eigen::VectorXd Evaluate(const Eigen::VectorXd& x,
                           std::vector<Eigen::VectorXd>* activations) const;

  // dL/dx for a single sample given activations from Evaluate.
  Eigen::VectorXd VectorJacobian(const std::vector<Eigen::VectorXd>& activations,
                                 const Eigen::VectorXd& dy) const;

  MlpGrad ZeroGrad() const;
  int ParameterCount() const;
  std::vector<double> Flatten() const;
  double ParameterDistance(const Mlp& other) const;

  void Write(std::ostream& out) const;
  static Mlp Read(std::istream& in);

 private:
  std::vector<Dense> layers_;
};

// Adam over a fixed list of parameter blocks.
class Adam {
 public:
  Adam() = default;
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

  // Blocks are identified by registration order; the first call sizes the
  // moment buffers.
  void Step(std::vector<Eigen::Map<Eigen::VectorXd>>& params,
            const std::vector<Eigen::Map<const Eigen::VectorXd>>& grads);

 private:
  double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  int t_ = 0;
  std::vector<Eigen::VectorXd> m_, v_;
};

// Views over every parameter / gradient block of an Mlp, in layer order.
void AppendParams(Mlp& net, std::vector<Eigen::Map<Eigen::VectorXd>>* out);
void AppendGrads(const MlpGrad& grad,
                 std::vector<Eigen::Map<const Eigen::VectorXd>>* out);

// Binary helpers shared by the weight files.
void WriteU32(std::ostream& out, uint32_t v);
uint32_t ReadU32(std::istream& in);
void WriteMatrix(std::ostream& out, const Eigen::MatrixXd& m);
Eigen::MatrixXd ReadMatrix(std::istream& in);

}  // namespace muskwheel::nn

#endif  // MUSKWHEEL_NN_MLP_H_
