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

#include "muskwheel/schema/dynamic_schema.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "json.hpp"
#include "muskwheel/core/errors.h"
#include "muskwheel/nn/mlp.h"

namespace muskwheel {

namespace {

constexpr uint32_t kDynamicMagic = 0x5344574d;  // "MWDS"
constexpr uint32_t kDynamicVersion = 1;

struct DynGrads {
  nn::GruGrad cell;
  Eigen::MatrixXd v;
  Eigen::VectorXd d;
  explicit DynGrads(const DynamicsNet& net)
      : cell(net.cell()),
        v(Eigen::MatrixXd::Zero(net.s_dim(), net.hidden())),
        d(Eigen::VectorXd::Zero(net.s_dim())) {}
  void SetZero() {
    cell.SetZero();
    v.setZero();
    d.setZero();
  }
};

// Forward pass over T steps for a batch of B columns, normalized units.
struct Unroll {
  bool teacher = false;
  std::vector<nn::GruCache> caches;
  std::vector<Eigen::MatrixXd> h;     // T + 1, h[0] = 0
  std::vector<Eigen::MatrixXd> pred;  // T, prediction of s_{t+1}
};

// teacher: when non-null, step t reads (*teacher)[t] as its state input;
// otherwise it reads s0 and then its own predictions.
void Forward(const DynamicsNet& net, const Eigen::MatrixXd& s0,
             const std::vector<Eigen::MatrixXd>* teacher,
             const std::vector<Eigen::MatrixXd>& u, const Eigen::MatrixXd& p,
             Unroll* out) {
  const int steps = static_cast<int>(u.size());
  const int batch = static_cast<int>(s0.cols());
  const int ns = net.s_dim(), nu = net.u_dim(), np = net.p_dim();
  out->teacher = teacher != nullptr;
  out->caches.assign(steps, {});
  out->h.assign(steps + 1, Eigen::MatrixXd::Zero(net.hidden(), batch));
  out->pred.assign(steps, {});
  Eigen::MatrixXd x(ns + nu + np, batch);
  for (int t = 0; t < steps; ++t) {
    const Eigen::MatrixXd& in =
        teacher ? (*teacher)[t] : (t == 0 ? s0 : out->pred[t - 1]);
    x.topRows(ns) = in;
    x.middleRows(ns, nu) = u[t];
    x.bottomRows(np) = p;
    out->h[t + 1] = nn::GruForward(net.cell(), x, out->h[t], &out->caches[t]);
    out->pred[t] = in + ((net.readout() * out->h[t + 1]).colwise() +
                         net.readout_bias());
  }
}

// Backpropagates dL/dpred through the unroll. Any output may be null.
void Backward(const DynamicsNet& net, const Unroll& un,
              const std::vector<Eigen::MatrixXd>& dpred, DynGrads* grads,
              std::vector<Eigen::MatrixXd>* du, Eigen::MatrixXd* dp,
              Eigen::MatrixXd* ds0) {
  const int steps = static_cast<int>(un.pred.size());
  const int ns = net.s_dim(), nu = net.u_dim(), np = net.p_dim();
  const int batch = static_cast<int>(un.h[0].cols());
  Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(net.hidden(), batch);
  Eigen::MatrixXd carry = Eigen::MatrixXd::Zero(ns, batch);
  if (du) du->assign(steps, {});
  if (dp) *dp = Eigen::MatrixXd::Zero(np, batch);
  Eigen::MatrixXd dx;
  for (int t = steps - 1; t >= 0; --t) {
    const Eigen::MatrixXd g = dpred[t] + carry;
    if (grads) {
      grads->v.noalias() += g * un.h[t + 1].transpose();
      grads->d += g.rowwise().sum();
    }
    dh.noalias() += net.readout().transpose() * g;
    dh = nn::GruBackward(net.cell(), un.caches[t], dh,
                         grads ? &grads->cell : nullptr, &dx);
    const Eigen::MatrixXd din = g + dx.topRows(ns);
    if (du) (*du)[t] = dx.middleRows(ns, nu);
    if (dp) *dp += dx.bottomRows(np);
    if (un.teacher) {
      carry.setZero();
    } else {
      carry = din;
    }
    if (t == 0 && ds0) *ds0 = din;
  }
}

void AppendBlock(Eigen::MatrixXd& m, std::vector<Eigen::Map<Eigen::VectorXd>>* out) {
  out->emplace_back(m.data(), m.size());
}
void AppendBlock(Eigen::VectorXd& v, std::vector<Eigen::Map<Eigen::VectorXd>>* out) {
  out->emplace_back(v.data(), v.size());
}
void AppendGrad(const Eigen::MatrixXd& m,
                std::vector<Eigen::Map<const Eigen::VectorXd>>* out) {
  out->emplace_back(m.data(), m.size());
}
void AppendGrad(const Eigen::VectorXd& v,
                std::vector<Eigen::Map<const Eigen::VectorXd>>* out) {
  out->emplace_back(v.data(), v.size());
}

void CheckSequence(const DynamicsNet& net, const DynSequence& seq) {
  if (seq.s.rows() != net.s_dim() || seq.u.rows() != net.u_dim() ||
      seq.s.cols() != seq.u.cols() + 1) {
    throw UsageError("sequence shape does not match the dynamics net");
  }
}

// Teacher inputs / targets of one sequence as per-step columns.
std::vector<Eigen::MatrixXd> Columns(const Eigen::MatrixXd& m, int first,
                                     int count) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(count);
  for (int t = 0; t < count; ++t) out.emplace_back(m.col(first + t));
  return out;
}

void Fnv(const double* data, size_t n, uint64_t* h) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n * sizeof(double); ++i) {
    *h ^= bytes[i];
    *h *= 1099511628211ULL;
  }
}

nlohmann::json VecJson(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd JsonVec(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
}

}  // namespace

DynamicsNet::DynamicsNet(const Shape& shape, uint64_t seed) : shape_(shape) {
  if (shape.s_dim < 1 || shape.u_dim < 1 || shape.p_dim < 1 ||
      shape.hidden < 1) {
    throw UsageError("invalid dynamics net shape");
  }
  std::mt19937_64 rng(seed);
  cell_ = nn::Gru(shape.s_dim + shape.u_dim + shape.p_dim, shape.hidden, rng);
  std::normal_distribution<double> small(0.0, 0.01);
  v_.resize(shape.s_dim, shape.hidden);
  for (int j = 0; j < v_.cols(); ++j) {
    for (int i = 0; i < v_.rows(); ++i) v_(i, j) = small(rng);
  }
  d_ = Eigen::VectorXd::Zero(shape.s_dim);
  s_mean_ = Eigen::VectorXd::Zero(shape.s_dim);
  s_scale_ = Eigen::VectorXd::Ones(shape.s_dim);
  u_mean_ = Eigen::VectorXd::Zero(shape.u_dim);
  u_scale_ = Eigen::VectorXd::Ones(shape.u_dim);
}

void DynamicsNet::FitNormalization(const std::vector<DynSequence>& data) {
  if (data.empty()) throw UsageError("cannot fit normalization on no data");
  Eigen::VectorXd ss = Eigen::VectorXd::Zero(s_dim()), sq = ss;
  Eigen::VectorXd us = Eigen::VectorXd::Zero(u_dim()), uq = us;
  double ns = 0, nu = 0;
  for (const DynSequence& seq : data) {
    CheckSequence(*this, seq);
    ss += seq.s.rowwise().sum();
    sq += seq.s.cwiseAbs2().rowwise().sum();
    us += seq.u.rowwise().sum();
    uq += seq.u.cwiseAbs2().rowwise().sum();
    ns += seq.s.cols();
    nu += seq.u.cols();
  }
  s_mean_ = ss / ns;
  u_mean_ = us / nu;
  s_scale_ = (sq / ns - s_mean_.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt().cwiseMax(1e-6);
  u_scale_ = (uq / nu - u_mean_.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt().cwiseMax(1e-6);
}

Eigen::MatrixXd DynamicsNet::NormalizeS(const Eigen::MatrixXd& s) const {
  return (s.colwise() - s_mean_).array().colwise() / s_scale_.array();
}

Eigen::MatrixXd DynamicsNet::DenormalizeS(const Eigen::MatrixXd& s) const {
  return (s.array().colwise() * s_scale_.array()).matrix().colwise() + s_mean_;
}

Eigen::MatrixXd DynamicsNet::NormalizeU(const Eigen::MatrixXd& u) const {
  return (u.colwise() - u_mean_).array().colwise() / u_scale_.array();
}

uint64_t DynamicsNet::WeightChecksum() const {
  uint64_t h = 1469598103934665603ULL;
  Fnv(cell_.wx.data(), cell_.wx.size(), &h);
  Fnv(cell_.wh.data(), cell_.wh.size(), &h);
  Fnv(cell_.bx.data(), cell_.bx.size(), &h);
  Fnv(cell_.bh.data(), cell_.bh.size(), &h);
  Fnv(v_.data(), v_.size(), &h);
  Fnv(d_.data(), d_.size(), &h);
  return h;
}

void DynamicsNet::Save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  nn::WriteU32(out, kDynamicMagic);
  nn::WriteU32(out, kDynamicVersion);
  nn::WriteU32(out, shape_.s_dim);
  nn::WriteU32(out, shape_.u_dim);
  nn::WriteU32(out, shape_.p_dim);
  nn::WriteU32(out, shape_.hidden);
  cell_.Write(out);
  nn::WriteMatrix(out, v_);
  nn::WriteMatrix(out, d_);

  nlohmann::json side;
  side["format"] = "muskwheel-dynamic-schema";
  side["version"] = kDynamicVersion;
  side["s_mean"] = VecJson(s_mean_);
  side["s_scale"] = VecJson(s_scale_);
  side["u_mean"] = VecJson(u_mean_);
  side["u_scale"] = VecJson(u_scale_);
  nlohmann::json table = nlohmann::json::object();
  for (const auto& [id, p] : p_table_) table[id] = VecJson(p);
  side["p_table"] = table;
  std::ofstream js(path + ".json");
  js << side.dump(2) << '\n';
}

DynamicsNet DynamicsNet::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  if (nn::ReadU32(in) != kDynamicMagic) throw FormatError("not a dynamic schema file");
  if (nn::ReadU32(in) != kDynamicVersion) throw FormatError("unsupported dynamic schema version");
  DynamicsNet net;
  net.shape_.s_dim = nn::ReadU32(in);
  net.shape_.u_dim = nn::ReadU32(in);
  net.shape_.p_dim = nn::ReadU32(in);
  net.shape_.hidden = nn::ReadU32(in);
  net.cell_ = nn::Gru::Read(in);
  net.v_ = nn::ReadMatrix(in);
  net.d_ = nn::ReadMatrix(in);
  if (net.cell_.input() != net.s_dim() + net.u_dim() + net.p_dim() ||
      net.cell_.hidden() != net.hidden() || net.v_.rows() != net.s_dim()) {
    throw FormatError("weight shapes do not match header");
  }
  std::ifstream js(path + ".json");
  if (!js) throw FormatError("missing sidecar " + path + ".json");
  try {
    nlohmann::json side;
    js >> side;
    net.s_mean_ = JsonVec(side.at("s_mean"));
    net.s_scale_ = JsonVec(side.at("s_scale"));
    net.u_mean_ = JsonVec(side.at("u_mean"));
    net.u_scale_ = JsonVec(side.at("u_scale"));
    for (const auto& [id, p] : side.at("p_table").items()) {
      net.p_table_[id] = JsonVec(p);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad dynamic schema sidecar: ") + e.what());
  }
  if (net.s_mean_.size() != net.s_dim() || net.u_mean_.size() != net.u_dim()) {
    throw FormatError("normalization sidecar has wrong size");
  }
  return net;
}

Eigen::MatrixXd PredictRollout(const DynamicsNet& net, const Eigen::VectorXd& s0,
                               const Eigen::MatrixXd& u, const Eigen::VectorXd& p) {
  if (s0.size() != net.s_dim() || p.size() != net.p_dim() ||
      (u.cols() > 0 && u.rows() != net.u_dim())) {
    throw UsageError("rollout input sizes do not match the dynamics net");
  }
  const int steps = static_cast<int>(u.cols());
  Eigen::MatrixXd out(net.s_dim(), steps + 1);
  out.col(0) = s0;
  if (steps == 0) return out;
  Unroll un;
  Forward(net, net.NormalizeS(s0), nullptr, Columns(net.NormalizeU(u), 0, steps),
          p, &un);
  for (int t = 0; t < steps; ++t) out.col(t + 1) = net.DenormalizeS(un.pred[t]);
  return out;
}

Eigen::MatrixXd PredictOneStep(const DynamicsNet& net, const DynSequence& seq,
                               const Eigen::VectorXd& p) {
  CheckSequence(net, seq);
  const int steps = seq.length();
  const Eigen::MatrixXd sn = net.NormalizeS(seq.s);
  const std::vector<Eigen::MatrixXd> teacher = Columns(sn, 0, steps);
  Unroll un;
  Forward(net, teacher.empty() ? Eigen::MatrixXd(sn.col(0)) : teacher[0], &teacher,
          Columns(net.NormalizeU(seq.u), 0, steps), p, &un);
  Eigen::MatrixXd out(net.s_dim(), steps);
  for (int t = 0; t < steps; ++t) out.col(t) = net.DenormalizeS(un.pred[t]);
  return out;
}

double OneStepRmse(const DynamicsNet& net, const std::vector<DynSequence>& data) {
  double sum = 0.0, count = 0.0;
  for (const DynSequence& seq : data) {
    const auto it = net.p_table().find(seq.object_id);
    if (it == net.p_table().end()) {
      throw UsageError("no parametric bias for object '" + seq.object_id + "'");
    }
    const Eigen::MatrixXd pred = net.NormalizeS(PredictOneStep(net, seq, it->second));
    const Eigen::MatrixXd truth = net.NormalizeS(seq.s.rightCols(seq.length()));
    sum += (pred - truth).squaredNorm();
    count += pred.size();
  }
  return count > 0 ? std::sqrt(sum / count) : 0.0;
}

DynTrainReport TrainDynamics(DynamicsNet* net, const std::vector<DynSequence>& data,
                             uint64_t seed, const DynTrainOptions& options) {
  std::set<std::string> ids;
  for (const DynSequence& seq : data) {
    CheckSequence(*net, seq);
    if (seq.length() < 20) throw UsageError("training sequences need >= 20 steps");
    ids.insert(seq.object_id);
  }
  if (ids.size() < 2) throw UsageError("training needs >= 2 distinct object ids");
  net->FitNormalization(data);

  const int n_seq = static_cast<int>(data.size());
  const int ns = net->s_dim(), np = net->p_dim();
  std::vector<Eigen::MatrixXd> sn, un;
  for (const DynSequence& seq : data) {
    sn.push_back(net->NormalizeS(seq.s));
    un.push_back(net->NormalizeU(seq.u));
  }

  Eigen::MatrixXd p_all = Eigen::MatrixXd::Zero(np, n_seq);
  std::vector<int> group(n_seq);
  {
    std::map<std::string, int> index;
    for (int i = 0; i < n_seq; ++i) {
      group[i] = index.try_emplace(data[i].object_id, int(index.size())).first->second;
    }
  }
  const int n_groups = static_cast<int>(ids.size());
  DynGrads grads(*net);
  Eigen::MatrixXd gp = Eigen::MatrixXd::Zero(np, n_seq);
  std::vector<Eigen::Map<Eigen::VectorXd>> params;
  AppendBlock(net->cell().wx, &params);
  AppendBlock(net->cell().wh, &params);
  AppendBlock(net->cell().bx, &params);
  AppendBlock(net->cell().bh, &params);
  AppendBlock(net->readout(), &params);
  AppendBlock(net->readout_bias(), &params);
  if (options.p_lr <= 0.0) AppendBlock(p_all, &params);
  std::vector<Eigen::Map<const Eigen::VectorXd>> grad_maps;
  AppendGrad(grads.cell.wx, &grad_maps);
  AppendGrad(grads.cell.wh, &grad_maps);
  AppendGrad(grads.cell.bx, &grad_maps);
  AppendGrad(grads.cell.bh, &grad_maps);
  AppendGrad(grads.v, &grad_maps);
  AppendGrad(grads.d, &grad_maps);
  if (options.p_lr <= 0.0) AppendGrad(gp, &grad_maps);
  nn::Adam adam(options.lr);

  std::mt19937_64 rng(seed);
  std::vector<int> order(n_seq);
  std::iota(order.begin(), order.end(), 0);
  DynTrainReport report;
  const int batch = std::max(1, options.batch);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    const double frac = options.epochs > 1 ? double(epoch) / (options.epochs - 1) : 1.0;
    adam.set_lr(options.lr_final +
                0.5 * (options.lr - options.lr_final) * (1.0 + std::cos(M_PI * frac)));
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    int batches = 0;
    for (int start = 0; start < n_seq; start += batch) {
      const int b = std::min(batch, n_seq - start);
      int shortest = std::numeric_limits<int>::max();
      for (int k = 0; k < b; ++k) {
        shortest = std::min(shortest, data[order[start + k]].length());
      }
      Eigen::MatrixXd p(np, b);
      for (int k = 0; k < b; ++k) p.col(k) = p_all.col(order[start + k]);
      // `len` steps of every batch sequence from a random offset each
      struct Cut {
        std::vector<Eigen::MatrixXd> teacher, target, u;
      };
      auto cut = [&](int len) {
        Cut c{std::vector<Eigen::MatrixXd>(len, Eigen::MatrixXd(ns, b)),
              std::vector<Eigen::MatrixXd>(len, Eigen::MatrixXd(ns, b)),
              std::vector<Eigen::MatrixXd>(len, Eigen::MatrixXd(net->u_dim(), b))};
        for (int k = 0; k < b; ++k) {
          const int idx = order[start + k];
          std::uniform_int_distribution<int> offset(0, data[idx].length() - len);
          const int t0 = offset(rng);
          for (int t = 0; t < len; ++t) {
            c.teacher[t].col(k) = sn[idx].col(t0 + t);
            c.target[t].col(k) = sn[idx].col(t0 + t + 1);
            c.u[t].col(k) = un[idx].col(t0 + t);
          }
        }
        return c;
      };

      grads.SetZero();
      gp.setZero();
      double loss = 0.0;
      Eigen::MatrixXd dp_total = Eigen::MatrixXd::Zero(np, b);
      auto accumulate = [&](const Unroll& roll, const Cut& c, double weight) {
        const int len = static_cast<int>(c.target.size());
        std::vector<Eigen::MatrixXd> dpred(len);
        const double norm = 1.0 / (double(len) * ns * b);
        for (int t = 0; t < len; ++t) {
          const Eigen::MatrixXd diff = roll.pred[t] - c.target[t];
          loss += weight * norm * diff.squaredNorm();
          dpred[t] = (2.0 * weight * norm) * diff;
        }
        Eigen::MatrixXd dp;
        Backward(*net, roll, dpred, &grads, nullptr, &dp, nullptr);
        dp_total += dp;
      };
      {
        const Cut c = cut(options.window > 0 ? std::min(shortest, options.window)
                                             : shortest);
        Unroll tf;
        Forward(*net, c.teacher[0], &c.teacher, c.u, p, &tf);
        accumulate(tf, c, 1.0);
      }
      if (options.rollout_weight > 0.0) {
        const Cut c = cut(std::min(shortest, std::max(1, options.rollout_length)));
        Unroll fr;
        Forward(*net, c.teacher[0], nullptr, c.u, p, &fr);
        accumulate(fr, c, options.rollout_weight);
      }
      // per-object means of p; each sequence's p is pulled toward its own
      Eigen::MatrixXd centre = Eigen::MatrixXd::Zero(np, n_groups);
      Eigen::VectorXd members = Eigen::VectorXd::Zero(n_groups);
      for (int i = 0; i < n_seq; ++i) {
        centre.col(group[i]) += p_all.col(i);
        members[group[i]] += 1.0;
      }
      for (int g = 0; g < n_groups; ++g) centre.col(g) /= members[g];
      for (int k = 0; k < b; ++k) {
        const int idx = order[start + k];
        const Eigen::VectorXd off = p.col(k) - centre.col(group[idx]);
        loss += (options.p_decay * p.col(k).squaredNorm() +
                 options.p_pool * off.squaredNorm()) / b;
        gp.col(idx) = dp_total.col(k) +
                      (2.0 / b) * (options.p_decay * p.col(k) + options.p_pool * off);
      }
      if (!std::isfinite(loss)) throw TrainingError("dynamic schema loss diverged");
      adam.Step(params, grad_maps);
      if (options.p_lr > 0.0) p_all -= options.p_lr * gp;
      epoch_loss += loss;
      ++batches;
    }
    report.loss_history.push_back(epoch_loss / batches);
  }

  net->p_table().clear();
  std::map<std::string, int> counts;
  for (int i = 0; i < n_seq; ++i) {
    report.sequence_p.push_back(p_all.col(i));
    auto [it, inserted] = net->p_table().try_emplace(
        data[i].object_id, Eigen::VectorXd::Zero(np));
    it->second += p_all.col(i);
    ++counts[data[i].object_id];
  }
  for (auto& [id, p] : net->p_table()) p /= counts[id];
  return report;
}

double WindowLoss(const DynamicsNet& net, const DynSequence& window,
                  const Eigen::VectorXd& p, Eigen::VectorXd* grad_p,
                  bool free_run, int chunk) {
  CheckSequence(net, window);
  if (p.size() != net.p_dim()) throw UsageError("p size mismatch");
  const int length = window.length();
  const int steps = chunk > 0 ? std::min(chunk, length) : length;
  const int b = length - steps + 1;  // every chunk start, one batch column each
  const Eigen::MatrixXd sn = net.NormalizeS(window.s);
  const Eigen::MatrixXd un_all = net.NormalizeU(window.u);
  std::vector<Eigen::MatrixXd> teacher(steps, Eigen::MatrixXd(net.s_dim(), b));
  std::vector<Eigen::MatrixXd> u(steps, Eigen::MatrixXd(net.u_dim(), b));
  for (int t = 0; t < steps; ++t) {
    teacher[t] = sn.middleCols(t, b);
    u[t] = un_all.middleCols(t, b);
  }
  Unroll un;
  Forward(net, teacher[0], free_run ? nullptr : &teacher, u, p.replicate(1, b), &un);
  double loss = 0.0;
  const double norm = 1.0 / (double(steps) * b);
  std::vector<Eigen::MatrixXd> dpred(steps);
  for (int t = 0; t < steps; ++t) {
    const Eigen::MatrixXd diff = un.pred[t] - sn.middleCols(t + 1, b);
    loss += norm * diff.squaredNorm();
    dpred[t] = (2.0 * norm) * diff;
  }
  if (grad_p) {
    Eigen::MatrixXd dp;
    Backward(net, un, dpred, nullptr, nullptr, &dp, nullptr);
    *grad_p = dp.rowwise().sum();
  }
  return loss;
}

PbUpdateResult UpdatePbOnline(const DynamicsNet& net, const DynSequence& window,
                              const Eigen::VectorXd& p0,
                              const PbUpdateOptions& options) {
  if (window.length() < 5) throw UsageError("online window needs >= 5 steps");
  PbUpdateResult result;
  result.p = p0;
  Eigen::VectorXd grad;
  double loss = WindowLoss(net, window, result.p, &grad, options.free_run, options.chunk);
  result.loss_history.push_back(loss);
  double rate = options.rate;
  for (int it = 0; it < options.iters; ++it) {
    bool accepted = false;
    for (int h = 0; h <= options.max_halvings; ++h) {
      const Eigen::VectorXd trial = result.p - rate * grad;
      Eigen::VectorXd trial_grad;
      const double trial_loss =
          WindowLoss(net, window, trial, &trial_grad, options.free_run,
                                              options.chunk);
      if (trial_loss <= loss) {
        result.p = trial;
        loss = trial_loss;
        grad = trial_grad;
        accepted = true;
        rate *= options.grow;
        break;
      }
      rate *= 0.5;
    }
    if (!accepted) break;
    result.loss_history.push_back(loss);
  }
  return result;
}

int KnotCount(int horizon, int knot_spacing) {
  if (horizon < 1 || knot_spacing < 1) throw UsageError("horizon and knot spacing must be >= 1");
  return (horizon - 1) / knot_spacing + 2;
}

Eigen::MatrixXd ExpandKnots(const Eigen::MatrixXd& knots, int horizon,
                            int knot_spacing) {
  if (knots.cols() != KnotCount(horizon, knot_spacing)) {
    throw UsageError("knot count does not match the horizon");
  }
  Eigen::MatrixXd u(knots.rows(), horizon);
  for (int t = 0; t < horizon; ++t) {
    const int j = t / knot_spacing;
    const double a = double(t % knot_spacing) / knot_spacing;
    u.col(t) = (1.0 - a) * knots.col(j) + a * knots.col(j + 1);
  }
  return u;
}

double ControlLoss(const DynamicsNet& net, const Eigen::VectorXd& s0,
                   const DynGoal& goal, const Eigen::VectorXd& p,
                   const Eigen::MatrixXd& knots, const DynControlOptions& options,
                   Eigen::MatrixXd* grad) {
  if (s0.size() != net.s_dim() || p.size() != net.p_dim() ||
      knots.rows() != net.u_dim() || net.s_dim() < 4) {
    throw UsageError("control problem sizes do not match the dynamics net");
  }
  const int steps = options.horizon;
  const Eigen::MatrixXd u = ExpandKnots(knots, steps, options.knot_spacing);
  Unroll un;
  Forward(net, net.NormalizeS(s0), nullptr, Columns(net.NormalizeU(u), 0, steps),
          p, &un);
  const Eigen::VectorXd last = net.DenormalizeS(un.pred[steps - 1]);
  Eigen::VectorXd dlast = Eigen::VectorXd::Zero(net.s_dim());
  double loss = 0.0;
  switch (goal.kind) {
    case DynGoal::Kind::kTipPosition: {
      const Eigen::Vector2d e = last.head<2>() - goal.target;
      loss = goal.weight * e.squaredNorm();
      dlast.head<2>() = 2.0 * goal.weight * e;
      break;
    }
    case DynGoal::Kind::kTipSpeed: {
      const Eigen::Vector2d v = last.segment<2>(2);
      loss = -goal.weight * v.squaredNorm();
      dlast.segment<2>(2) = -2.0 * goal.weight * v;
      break;
    }
  }
  const Eigen::MatrixXd kn = knots.array().colwise() / net.u_scale().array();
  const Eigen::MatrixXd diffs =
      kn.rightCols(kn.cols() - 1) - kn.leftCols(kn.cols() - 1);
  loss += options.w_u * diffs.squaredNorm();
  if (!std::isfinite(loss)) throw OptimizationError("non-finite control loss");

  if (grad) {
    std::vector<Eigen::MatrixXd> dpred(
        steps, Eigen::MatrixXd::Zero(net.s_dim(), 1));
    dpred[steps - 1] = dlast.cwiseProduct(net.s_scale());
    std::vector<Eigen::MatrixXd> du;
    Backward(net, un, dpred, nullptr, &du, nullptr, nullptr);
    *grad = Eigen::MatrixXd::Zero(knots.rows(), knots.cols());
    for (int t = 0; t < steps; ++t) {
      const int j = t / options.knot_spacing;
      const double a = double(t % options.knot_spacing) / options.knot_spacing;
      const Eigen::VectorXd g = du[t].col(0).cwiseQuotient(net.u_scale());
      grad->col(j) += (1.0 - a) * g;
      grad->col(j + 1) += a * g;
    }
    // smoothness term, in normalized knots
    Eigen::MatrixXd gk = Eigen::MatrixXd::Zero(kn.rows(), kn.cols());
    gk.rightCols(kn.cols() - 1) += 2.0 * options.w_u * diffs;
    gk.leftCols(kn.cols() - 1) -= 2.0 * options.w_u * diffs;
    *grad += (gk.array().colwise() / net.u_scale().array()).matrix();
  }
  return loss;
}

DynControlResult OptimizeControls(const DynamicsNet& net, const Eigen::VectorXd& s0,
                                  const DynGoal& goal, const Eigen::VectorXd& p,
                                  const Eigen::VectorXd& u_lower,
                                  const Eigen::VectorXd& u_upper,
                                  const std::optional<Eigen::MatrixXd>& init,
                                  const DynControlOptions& options) {
  if (options.horizon < 1) throw UsageError("horizon must be >= 1");
  if (options.iters < 0) throw UsageError("iters must be >= 0");
  if (u_lower.size() != net.u_dim() || u_upper.size() != net.u_dim() ||
      (u_upper - u_lower).minCoeff() < 0.0) {
    throw UsageError("control bounds are inconsistent");
  }
  const int nk = KnotCount(options.horizon, options.knot_spacing);
  auto project = [&](Eigen::MatrixXd k) {
    for (int j = 0; j < k.cols(); ++j) {
      k.col(j) = k.col(j).cwiseMax(u_lower).cwiseMin(u_upper);
    }
    return k;
  };
  Eigen::MatrixXd knots;
  if (init) {
    if (init->rows() != net.u_dim() || init->cols() != nk) {
      throw UsageError("initial knots have the wrong shape");
    }
    knots = project(*init);
  } else {
    knots = (0.5 * (u_lower + u_upper)).replicate(1, nk);
  }
  const Eigen::VectorXd scale2 = net.u_scale().cwiseAbs2();

  DynControlResult result;
  Eigen::MatrixXd grad;
  double loss = ControlLoss(net, s0, goal, p, knots, options, &grad);
  result.loss_history.push_back(loss);
  double gamma = options.gamma;
  for (int it = 0; it < options.iters; ++it) {
    bool accepted = false;
    for (int h = 0; h <= options.max_halvings; ++h) {
      const Eigen::MatrixXd step = grad.array().colwise() * scale2.array();
      const Eigen::MatrixXd trial = project(knots - gamma * step);
      Eigen::MatrixXd trial_grad;
      const double trial_loss =
          ControlLoss(net, s0, goal, p, trial, options, &trial_grad);
      if (trial_loss <= loss) {
        knots = trial;
        loss = trial_loss;
        grad = trial_grad;
        accepted = true;
        gamma = std::min(options.gamma, 1.5 * gamma);
        break;
      }
      gamma *= 0.5;
    }
    if (!accepted) break;
    result.loss_history.push_back(loss);
  }
  result.knots = knots;
  result.u = ExpandKnots(knots, options.horizon, options.knot_spacing);
  result.predicted = PredictRollout(net, s0, result.u, p);
  return result;
}

}  // namespace muskwheel
