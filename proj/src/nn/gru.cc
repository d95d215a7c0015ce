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

#include "muskwheel/nn/gru.h"

#include <cmath>

#include "muskwheel/nn/mlp.h"

namespace muskwheel::nn {

namespace {

Eigen::MatrixXd Sigmoid(const Eigen::MatrixXd& a) {
  return a.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

}  // namespace

Gru::Gru(int input, int hidden, std::mt19937_64& rng) {
  const double sx = std::sqrt(6.0 / (input + hidden));
  const double sh = std::sqrt(6.0 / (2.0 * hidden));
  std::uniform_real_distribution<double> ux(-sx, sx), uh(-sh, sh);
  wx.resize(3 * hidden, input);
  wh.resize(3 * hidden, hidden);
  for (int j = 0; j < input; ++j) {
    for (int i = 0; i < 3 * hidden; ++i) wx(i, j) = ux(rng);
  }
  for (int j = 0; j < hidden; ++j) {
    for (int i = 0; i < 3 * hidden; ++i) wh(i, j) = uh(rng);
  }
  bx = Eigen::VectorXd::Zero(3 * hidden);
  bh = Eigen::VectorXd::Zero(3 * hidden);
}

void Gru::Write(std::ostream& out) const {
  WriteMatrix(out, wx);
  WriteMatrix(out, wh);
  WriteMatrix(out, bx);
  WriteMatrix(out, bh);
}

Gru Gru::Read(std::istream& in) {
  Gru g;
  g.wx = ReadMatrix(in);
  g.wh = ReadMatrix(in);
  g.bx = ReadMatrix(in);
  g.bh = ReadMatrix(in);
  return g;
}

GruGrad::GruGrad(const Gru& cell)
    : wx(Eigen::MatrixXd::Zero(cell.wx.rows(), cell.wx.cols())),
      wh(Eigen::MatrixXd::Zero(cell.wh.rows(), cell.wh.cols())),
      bx(Eigen::VectorXd::Zero(cell.bx.size())),
      bh(Eigen::VectorXd::Zero(cell.bh.size())) {}

void GruGrad::SetZero() {
  wx.setZero();
  wh.setZero();
  bx.setZero();
  bh.setZero();
}

Eigen::MatrixXd GruForward(const Gru& cell, const Eigen::MatrixXd& x,
                           const Eigen::MatrixXd& h, GruCache* cache) {
  const int nh = cell.hidden();
  const Eigen::MatrixXd a = (cell.wx * x).colwise() + cell.bx;
  const Eigen::MatrixXd b = (cell.wh * h).colwise() + cell.bh;
  Eigen::MatrixXd z = Sigmoid(a.topRows(nh) + b.topRows(nh));
  Eigen::MatrixXd r = Sigmoid(a.middleRows(nh, nh) + b.middleRows(nh, nh));
  Eigen::MatrixXd hn = b.bottomRows(nh);
  Eigen::MatrixXd n =
      (a.bottomRows(nh) + r.cwiseProduct(hn)).array().tanh().matrix();
  Eigen::MatrixXd out =
      (1.0 - z.array()).matrix().cwiseProduct(n) + z.cwiseProduct(h);
  if (cache) {
    cache->x = x;
    cache->h = h;
    cache->z = std::move(z);
    cache->r = std::move(r);
    cache->n = std::move(n);
    cache->hn = std::move(hn);
  }
  return out;
}

Eigen::MatrixXd GruBackward(const Gru& cell, const GruCache& c,
                            const Eigen::MatrixXd& dh_next, GruGrad* grad,
                            Eigen::MatrixXd* dx) {
  const int nh = cell.hidden();
  const int batch = static_cast<int>(dh_next.cols());
  const Eigen::ArrayXXd dn =
      dh_next.array() * (1.0 - c.z.array()) * (1.0 - c.n.array().square());
  const Eigen::ArrayXXd dz =
      dh_next.array() * (c.h - c.n).array() * c.z.array() * (1.0 - c.z.array());
  const Eigen::ArrayXXd dr =
      dn * c.hn.array() * c.r.array() * (1.0 - c.r.array());

  Eigen::MatrixXd da(3 * nh, batch), db(3 * nh, batch);
  da.topRows(nh) = dz.matrix();
  da.middleRows(nh, nh) = dr.matrix();
  da.bottomRows(nh) = dn.matrix();
  db.topRows(nh) = dz.matrix();
  db.middleRows(nh, nh) = dr.matrix();
  db.bottomRows(nh) = (dn * c.r.array()).matrix();

  if (grad) {
    grad->wx.noalias() += da * c.x.transpose();
    grad->wh.noalias() += db * c.h.transpose();
    grad->bx += da.rowwise().sum();
    grad->bh += db.rowwise().sum();
  }
  if (dx) *dx = cell.wx.transpose() * da;
  Eigen::MatrixXd dh = cell.wh.transpose() * db;
  dh += dh_next.cwiseProduct(c.z);
  return dh;
}

}  // namespace muskwheel::nn
