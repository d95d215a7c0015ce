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

#ifndef MUSKWHEEL_NN_GRU_H_
#define MUSKWHEEL_NN_GRU_H_

#include <iosfwd>
#include <random>

#include <Eigen/Core>

namespace muskwheel::nn {

// Gated recurrent cell, batched over columns.
//
//   z  = sigmoid(Wx_z x + bx_z + Wh_z h + bh_z)
//   r  = sigmoid(Wx_r x + bx_r + Wh_r h + bh_r)
//   n  = tanh(Wx_n x + bx_n + r * (Wh_n h + bh_n))
//   h' = (1 - z) * n + z * h
//
// Gate rows are stacked [z; r; n].
struct Gru {
  Eigen::MatrixXd wx;  // 3H x D
  Eigen::MatrixXd wh;  // 3H x H
  Eigen::VectorXd bx;  // 3H
  Eigen::VectorXd bh;  // 3H

  Gru() = default;
  Gru(int input, int hidden, std::mt19937_64& rng);

  int input() const { return static_cast<int>(wx.cols()); }
  int hidden() const { return static_cast<int>(wh.cols()); }

  void Write(std::ostream& out) const;
  static Gru Read(std::istream& in);
};

struct GruCache {
  Eigen::MatrixXd x, h, z, r, n, hn;  // hn = Wh_n h + bh_n
};

struct GruGrad {
  Eigen::MatrixXd wx, wh;
  Eigen::VectorXd bx, bh;
  explicit GruGrad(const Gru& cell);
  void SetZero();
};

Eigen::MatrixXd GruForward(const Gru& cell, const Eigen::MatrixXd& x,
                           const Eigen::MatrixXd& h, GruCache* cache);

// Accumulates parameter gradients (when grad is non-null), writes dL/dx and
// returns dL/dh for the previous hidden state.
Eigen::MatrixXd GruBackward(const Gru& cell, const GruCache& cache,
                            const Eigen::MatrixXd& dh_next, GruGrad* grad,
                            Eigen::MatrixXd* dx);

}  // namespace muskwheel::nn

#endif  // MUSKWHEEL_NN_GRU_H_
