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

#include "muskwheel/nn/mlp.h"

#include <cmath>
#include <istream>
#include <ostream>

#include "muskwheel/core/errors.h"

namespace muskwheel::nn {

void MlpGrad::SetZero() {
  for (auto& m : w) m.setZero();
  for (auto& v : b) v.setZero();
}

Mlp::Mlp(const std::vector<int>& sizes, std::mt19937_64& rng) {
  if (sizes.size() < 2) throw UsageError("an MLP needs at least two sizes");
  for (size_t k = 0; k + 1 < sizes.size(); ++k) {
    Dense d;
    const int in = sizes[k], out = sizes[k + 1];
    const double limit = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    d.w.resize(out, in);
    for (int j = 0; j < in; ++j) {
      for (int i = 0; i < out; ++i) d.w(i, j) = dist(rng);
    }
    d.b = Eigen::VectorXd::Zero(out);
    d.act = k + 2 == sizes.size() ? Activation::kLinear : Activation::kTanh;
    layers_.push_back(std::move(d));
  }
}

Eigen::MatrixXd Mlp::Forward(const Eigen::MatrixXd& x, MlpTape* tape) const {
  if (tape) {
    tape->inputs.clear();
    tape->outputs.clear();
  }
  Eigen::MatrixXd h = x;
  for (const Dense& d : layers_) {
    if (tape) tape->inputs.push_back(h);
    Eigen::MatrixXd z = d.w * h;
    z.colwise() += d.b;
    if (d.act == Activation::kTanh) z = z.array().tanh();
    if (tape) tape->outputs.push_back(z);
    h = std::move(z);
  }
  return h;
}

Eigen::MatrixXd Mlp::Backward(const MlpTape& tape, const Eigen::MatrixXd& dy,
                              MlpGrad* grad) const {
  Eigen::MatrixXd delta = dy;
  for (int k = static_cast<int>(layers_.size()) - 1; k >= 0; --k) {
    const Dense& d = layers_[k];
    if (d.act == Activation::kTanh) {
      delta.array() *= 1.0 - tape.outputs[k].array().square();
    }
    if (grad) {
      grad->w[k].noalias() += delta * tape.inputs[k].transpose();
      grad->b[k] += delta.rowwise().sum();
    }
    delta = d.w.transpose() * delta;
  }
  return delta;
}

Eigen::VectorXd Mlp::Evaluate(const Eigen::VectorXd& x) const {
  return Evaluate(x, nullptr);
}

Eigen::VectorXd Mlp::Evaluate(const Eigen::VectorXd& x,
                              std::vector<Eigen::VectorXd>* activations) const {
  if (x.size() != in()) throw UsageError("MLP input size mismatch");
  if (activations) activations->clear();
  Eigen::VectorXd h = x;
  for (const Dense& d : layers_) {
    Eigen::VectorXd z = d.b;
    for (int j = 0; j < d.in(); ++j) z += d.w.col(j) * h[j];
    if (d.act == Activation::kTanh) z = z.array().tanh();
    if (activations) activations->push_back(z);
    h = std::move(z);
  }
  return h;
}

Eigen::VectorXd Mlp::VectorJacobian(
    const std::vector<Eigen::VectorXd>& activations,
    const Eigen::VectorXd& dy) const {
  Eigen::VectorXd delta = dy;
  for (int k = static_cast<int>(layers_.size()) - 1; k >= 0; --k) {
    const Dense& d = layers_[k];
    if (d.act == Activation::kTanh) {
      delta.array() *= 1.0 - activations[k].array().square();
    }
    delta = d.w.transpose() * delta;
  }
  return delta;
}

MlpGrad Mlp::ZeroGrad() const {
  MlpGrad g;
  for (const Dense& d : layers_) {
    g.w.push_back(Eigen::MatrixXd::Zero(d.out(), d.in()));
    g.b.push_back(Eigen::VectorXd::Zero(d.out()));
  }
  return g;
}

int Mlp::ParameterCount() const {
  int n = 0;
  for (const Dense& d : layers_) n += d.w.size() + d.b.size();
  return n;
}

std::vector<double> Mlp::Flatten() const {
  std::vector<double> v;
  v.reserve(ParameterCount());
  for (const Dense& d : layers_) {
    v.insert(v.end(), d.w.data(), d.w.data() + d.w.size());
    v.insert(v.end(), d.b.data(), d.b.data() + d.b.size());
  }
  return v;
}

double Mlp::ParameterDistance(const Mlp& other) const {
  const auto a = Flatten(), b = other.Flatten();
  if (a.size() != b.size()) throw UsageError("networks differ in shape");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

void WriteU32(std::ostream& out, uint32_t v) {
  unsigned char bytes[4] = {static_cast<unsigned char>(v & 0xff),
                            static_cast<unsigned char>((v >> 8) & 0xff),
                            static_cast<unsigned char>((v >> 16) & 0xff),
                            static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

uint32_t ReadU32(std::istream& in) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    throw FormatError("unexpected end of weight file");
  }
  return bytes[0] | (bytes[1] << 8) | (bytes[2] << 16) |
         (static_cast<uint32_t>(bytes[3]) << 24);
}

// rows, cols, then row-major little-endian float64 values
void WriteMatrix(std::ostream& out, const Eigen::MatrixXd& m) {
  WriteU32(out, static_cast<uint32_t>(m.rows()));
  WriteU32(out, static_cast<uint32_t>(m.cols()));
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof(double));
    }
  }
}

Eigen::MatrixXd ReadMatrix(std::istream& in) {
  const uint32_t rows = ReadU32(in), cols = ReadU32(in);
  if (rows > 100000 || cols > 100000) throw FormatError("implausible matrix size");
  Eigen::MatrixXd m(rows, cols);
  for (uint32_t i = 0; i < rows; ++i) {
    for (uint32_t j = 0; j < cols; ++j) {
      double v;
      if (!in.read(reinterpret_cast<char*>(&v), sizeof(double))) {
        throw FormatError("unexpected end of weight file");
      }
      m(i, j) = v;
    }
  }
  return m;
}

void Mlp::Write(std::ostream& out) const {
  WriteU32(out, static_cast<uint32_t>(layers_.size()));
  for (const Dense& d : layers_) {
    WriteU32(out, d.act == Activation::kTanh ? 1u : 0u);
    WriteMatrix(out, d.w);
    WriteMatrix(out, d.b);
  }
}

Mlp Mlp::Read(std::istream& in) {
  Mlp net;
  const uint32_t n = ReadU32(in);
  if (n == 0 || n > 64) throw FormatError("bad layer count");
  for (uint32_t k = 0; k < n; ++k) {
    Dense d;
    d.act = ReadU32(in) == 1u ? Activation::kTanh : Activation::kLinear;
    d.w = ReadMatrix(in);
    Eigen::MatrixXd b = ReadMatrix(in);
    if (b.cols() != 1 || b.rows() != d.w.rows()) throw FormatError("bad bias shape");
    d.b = b.col(0);
    net.layers_.push_back(std::move(d));
  }
  return net;
}

void Adam::Step(std::vector<Eigen::Map<Eigen::VectorXd>>& params,
                const std::vector<Eigen::Map<const Eigen::VectorXd>>& grads) {
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.push_back(Eigen::VectorXd::Zero(p.size()));
      v_.push_back(Eigen::VectorXd::Zero(p.size()));
    }
  }
  if (m_.size() != params.size() || grads.size() != params.size()) {
    throw UsageError("Adam parameter blocks changed");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, t_);
  const double c2 = 1.0 - std::pow(beta2_, t_);
  for (size_t k = 0; k < params.size(); ++k) {
    m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * grads[k];
    v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * grads[k].cwiseAbs2();
    params[k].array() -= lr_ * (m_[k].array() / c1) /
                         ((v_[k].array() / c2).sqrt() + eps_);
  }
}

void AppendParams(Mlp& net, std::vector<Eigen::Map<Eigen::VectorXd>>* out) {
  for (Dense& d : net.layers()) {
    out->emplace_back(d.w.data(), d.w.size());
    out->emplace_back(d.b.data(), d.b.size());
  }
}

void AppendGrads(const MlpGrad& grad,
                 std::vector<Eigen::Map<const Eigen::VectorXd>>* out) {
  for (size_t k = 0; k < grad.w.size(); ++k) {
    out->emplace_back(grad.w[k].data(), grad.w[k].size());
    out->emplace_back(grad.b[k].data(), grad.b[k].size());
  }
}

}  // namespace muskwheel::nn
