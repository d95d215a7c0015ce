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

#include "muskwheel/schema/static_schema.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "muskwheel/core/errors.h"
#include "muskwheel/reflex/relaxation.h"
#include "muskwheel/reflex/tension_qp.h"

namespace muskwheel {

namespace {

constexpr uint32_t kStaticMagic = 0x5353574d;  // "MWSS"
constexpr uint32_t kStaticVersion = 1;

void AppendAll(nn::Mlp& a, nn::Mlp& b,
               std::vector<Eigen::Map<Eigen::VectorXd>>* out) {
  nn::AppendParams(a, out);
  nn::AppendParams(b, out);
}

double Rms(double sum_sq, double count) {
  return count > 0 ? std::sqrt(sum_sq / count) : 0.0;
}

}  // namespace

bool IsTrainingMask(const Mask& m) {
  return std::find(kTrainingMasks.begin(), kTrainingMasks.end(), m) !=
         kTrainingMasks.end();
}

StaticNet::StaticNet(const Shape& shape, uint64_t seed) : shape_(shape) {
  if (shape.n_joints < 1 || shape.n_muscles < 1 || shape.latent < 1 ||
      shape.hidden < 1) {
    throw UsageError("invalid static schema shape");
  }
  std::mt19937_64 rng(seed);
  encoder_ = nn::Mlp({input_dim(), shape.hidden, shape.hidden, shape.latent}, rng);
  decoder_ = nn::Mlp({shape.latent, shape.hidden, shape.hidden, output_dim()}, rng);
  mean_ = Eigen::VectorXd::Zero(output_dim());
  scale_ = Eigen::VectorXd::Ones(output_dim());
  fixed_.assign(output_dim(), false);
}

bool StaticNet::normalized() const {
  return std::all_of(fixed_.begin(), fixed_.end(), [](bool b) { return b; });
}

void StaticNet::FitNormalization(const std::vector<SensorTriple>& data) {
  if (data.empty()) throw UsageError("cannot fit normalization on no data");
  const int d = output_dim();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d), sq = Eigen::VectorXd::Zero(d);
  for (const SensorTriple& t : data) {
    Eigen::VectorXd v(d);
    v << t.theta, t.f, t.l;
    sum += v;
    sq += v.cwiseAbs2();
  }
  const double n = static_cast<double>(data.size());
  for (int c = 0; c < d; ++c) {
    if (fixed_[c]) continue;
    const double mu = sum[c] / n;
    const double var = std::max(0.0, sq[c] / n - mu * mu);
    mean_[c] = mu;
    scale_[c] = std::max(std::sqrt(var), 1e-9);
    fixed_[c] = true;
  }
}

Eigen::VectorXd StaticNet::NormalizedTarget(const SensorTriple& t) const {
  if (t.theta.size() != n_joints() || t.f.size() != n_muscles() ||
      t.l.size() != n_muscles()) {
    throw UsageError("sensor triple does not match the schema dimensions");
  }
  Eigen::VectorXd v(output_dim());
  v << t.theta, t.f, t.l;
  return (v - mean_).cwiseQuotient(scale_);
}

Eigen::VectorXd StaticNet::NetworkInput(const SensorTriple& t) const {
  const int nj = n_joints(), nm = n_muscles();
  Eigen::VectorXd y = NormalizedTarget(t);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(input_dim());
  if (t.mask[0]) x.segment(0, nj) = y.segment(0, nj);
  if (t.mask[1]) x.segment(nj, nm) = y.segment(nj, nm);
  if (t.mask[2]) x.segment(nj + nm, nm) = y.segment(nj + nm, nm);
  for (int k = 0; k < 3; ++k) x[nj + 2 * nm + k] = t.mask[k];
  return x;
}

StaticPrediction StaticNet::Denormalize(const Eigen::VectorXd& y) const {
  const int nj = n_joints(), nm = n_muscles();
  const Eigen::VectorXd v = y.cwiseProduct(scale_) + mean_;
  return {v.segment(0, nj), v.segment(nj, nm), v.segment(nj + nm, nm)};
}

Eigen::VectorXd StaticNet::Encode(const SensorTriple& t) const {
  if (!IsTrainingMask(t.mask)) {
    throw UsageError("mask must be one of (1,1,0), (0,1,1), (1,0,1)");
  }
  return encoder_.Evaluate(NetworkInput(t));
}

StaticPrediction StaticNet::Decode(const Eigen::VectorXd& z) const {
  return Denormalize(decoder_.Evaluate(z));
}

StaticPrediction StaticNet::Complete(const SensorTriple& t) const {
  return Decode(Encode(t));
}

StaticNet StaticNet::Grow(int n_new, uint64_t seed) const {
  if (n_new < 1) throw UsageError("grow_dimensions needs n_new_muscles >= 1");
  const int nj = n_joints(), nm = n_muscles(), nm2 = nm + n_new;
  Shape shape = shape_;
  shape.n_muscles = nm2;
  StaticNet grown;
  grown.shape_ = shape;
  grown.encoder_ = encoder_;
  grown.decoder_ = decoder_;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> small(0.0, 0.01);

  // channel maps old -> new for outputs [theta, f, l]
  std::vector<int> out_map(output_dim());
  for (int j = 0; j < nj; ++j) out_map[j] = j;
  for (int i = 0; i < nm; ++i) {
    out_map[nj + i] = nj + i;
    out_map[nj + nm + i] = nj + nm2 + i;
  }
  // inputs additionally carry the three mask bits
  std::vector<int> in_map(input_dim());
  for (int c = 0; c < output_dim(); ++c) in_map[c] = out_map[c];
  for (int k = 0; k < 3; ++k) in_map[nj + 2 * nm + k] = nj + 2 * nm2 + k;

  const int new_out = nj + 2 * nm2, new_in = new_out + 3;
  nn::Dense& first = grown.encoder_.layers().front();
  const nn::Dense& old_first = encoder_.layers().front();
  first.w.resize(old_first.out(), new_in);
  for (int j = 0; j < new_in; ++j) {
    for (int i = 0; i < first.out(); ++i) first.w(i, j) = small(rng);
  }
  for (int c = 0; c < old_first.in(); ++c) first.w.col(in_map[c]) = old_first.w.col(c);

  nn::Dense& last = grown.decoder_.layers().back();
  const nn::Dense& old_last = decoder_.layers().back();
  last.w.resize(new_out, old_last.in());
  last.b = Eigen::VectorXd::Zero(new_out);
  for (int j = 0; j < last.in(); ++j) {
    for (int i = 0; i < new_out; ++i) last.w(i, j) = small(rng);
  }
  for (int c = 0; c < old_last.out(); ++c) {
    last.w.row(out_map[c]) = old_last.w.row(c);
    last.b[out_map[c]] = old_last.b[c];
  }

  grown.mean_ = Eigen::VectorXd::Zero(new_out);
  grown.scale_ = Eigen::VectorXd::Ones(new_out);
  grown.fixed_.assign(new_out, false);
  for (int c = 0; c < output_dim(); ++c) {
    grown.mean_[out_map[c]] = mean_[c];
    grown.scale_[out_map[c]] = scale_[c];
    grown.fixed_[out_map[c]] = fixed_[c];
  }
  return grown;
}

void StaticNet::Save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  nn::WriteU32(out, kStaticMagic);
  nn::WriteU32(out, kStaticVersion);
  nn::WriteU32(out, shape_.n_joints);
  nn::WriteU32(out, shape_.n_muscles);
  nn::WriteU32(out, shape_.latent);
  nn::WriteU32(out, shape_.hidden);
  encoder_.Write(out);
  decoder_.Write(out);

  nlohmann::json side;
  side["format"] = "muskwheel-static-schema";
  side["version"] = kStaticVersion;
  side["channels"] = {{"theta", shape_.n_joints},
                      {"f", shape_.n_muscles},
                      {"l", shape_.n_muscles}};
  side["mean"] = std::vector<double>(mean_.data(), mean_.data() + mean_.size());
  side["scale"] = std::vector<double>(scale_.data(), scale_.data() + scale_.size());
  side["fixed"] = std::vector<bool>(fixed_.begin(), fixed_.end());
  std::ofstream js(path + ".json");
  js << side.dump(2) << '\n';
}

StaticNet StaticNet::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  if (nn::ReadU32(in) != kStaticMagic) throw FormatError("not a static schema file");
  if (nn::ReadU32(in) != kStaticVersion) throw FormatError("unsupported static schema version");
  StaticNet net;
  net.shape_.n_joints = nn::ReadU32(in);
  net.shape_.n_muscles = nn::ReadU32(in);
  net.shape_.latent = nn::ReadU32(in);
  net.shape_.hidden = nn::ReadU32(in);
  net.encoder_ = nn::Mlp::Read(in);
  net.decoder_ = nn::Mlp::Read(in);
  if (net.encoder_.in() != net.input_dim() || net.decoder_.out() != net.output_dim()) {
    throw FormatError("weight shapes do not match header");
  }
  std::ifstream js(path + ".json");
  if (!js) throw FormatError("missing normalization sidecar " + path + ".json");
  nlohmann::json side;
  try {
    js >> side;
    auto mean = side.at("mean").get<std::vector<double>>();
    auto scale = side.at("scale").get<std::vector<double>>();
    auto fixed = side.at("fixed").get<std::vector<bool>>();
    if (static_cast<int>(mean.size()) != net.output_dim() ||
        scale.size() != mean.size() || fixed.size() != mean.size()) {
      throw FormatError("normalization sidecar has wrong size");
    }
    net.mean_ = Eigen::Map<Eigen::VectorXd>(mean.data(), mean.size());
    net.scale_ = Eigen::Map<Eigen::VectorXd>(scale.data(), scale.size());
    net.fixed_ = fixed;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad normalization sidecar: ") + e.what());
  }
  return net;
}

std::vector<SensorTriple> SampleEquilibria(const ArmPlant& plant, int n,
                                           uint64_t seed,
                                           const SamplerOptions& options) {
  plant.Validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<SensorTriple> out;
  out.reserve(n);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(plant.n_joints);
  int attempts = 0;
  while (static_cast<int>(out.size()) < n) {
    if (++attempts > 20 * n + 100) throw SolverError("equilibrium sampler stalled", 0.0);
    Eigen::VectorXd theta(plant.n_joints);
    for (int j = 0; j < plant.n_joints; ++j) {
      const double lo = plant.joint_lower[j] + options.limit_margin;
      const double hi = plant.joint_upper[j] - options.limit_margin;
      theta[j] = lo + (hi - lo) * unit(rng);
    }
    RelaxProblem qp = HoldingProblem(plant, theta, 0.0, options.extra_hand_mass);
    for (int i = 0; i < plant.n_muscles; ++i) {
      const double u = unit(rng);
      // denser near the floor, where control drives the tensions
      qp.f_min[i] = options.floor_min + (options.floor_max - options.floor_min) * u * u;
      qp.w1[i] = std::exp(std::log(0.2) + (std::log(5.0) - std::log(0.2)) * unit(rng));
    }
    const Eigen::VectorXd f = SolveNecessaryTension(qp).x;
    const Eigen::VectorXd l_ref =
        MuscleLengths(plant, theta) -
        f.cwiseQuotient(plant.elastic_k).cwiseSqrt();
    QuasiStaticOptions qs;
    qs.initial_theta = &theta;
    qs.extra_hand_mass = options.extra_hand_mass;
    try {
      const Equilibrium eq = QuasiStaticSolve(plant, l_ref, zero, qs);
      if (!plant.WithinLimits(eq.theta, 0.0)) continue;
      out.push_back({eq.theta, eq.tension, l_ref, {1, 1, 1}});
    } catch (const SolverError&) {
      continue;
    }
  }
  return out;
}

double ReconstructionLoss(const StaticNet& net,
                          const std::vector<SensorTriple>& data) {
  double sum = 0.0;
  int count = 0;
  for (const SensorTriple& t : data) {
    const Eigen::VectorXd target = net.NormalizedTarget(t);
    for (const Mask& m : kTrainingMasks) {
      SensorTriple in = t;
      in.mask = m;
      const Eigen::VectorXd y = net.decoder().Evaluate(net.encoder().Evaluate(net.NetworkInput(in)));
      sum += (y - target).squaredNorm();
      count += target.size();
    }
  }
  return count ? sum / count : 0.0;
}

MaskedRmse EvaluateMasked(const StaticNet& net,
                          const std::vector<SensorTriple>& data) {
  MaskedRmse r;
  const int nj = net.n_joints(), nm = net.n_muscles();
  const std::array<int, 3> offset = {0, nj, nj + nm};
  const std::array<int, 3> size = {nj, nm, nm};
  double th = 0, ff = 0, ll = 0;
  std::array<double, 3> rep{}, pred{};
  std::array<double, 3> rep_n{}, pred_n{};
  for (const SensorTriple& t : data) {
    const Eigen::VectorXd target = net.NormalizedTarget(t);
    for (int mi = 0; mi < 3; ++mi) {
      SensorTriple in = t;
      in.mask = kTrainingMasks[mi];
      const StaticPrediction p = net.Complete(in);
      const Eigen::VectorXd y = net.decoder().Evaluate(net.encoder().Evaluate(net.NetworkInput(in)));
      for (int b = 0; b < 3; ++b) {
        const double e = (y.segment(offset[b], size[b]) - target.segment(offset[b], size[b])).squaredNorm();
        if (in.mask[b]) {
          rep[b] += e;
          rep_n[b] += size[b];
        } else {
          pred[b] += e;
          pred_n[b] += size[b];
        }
      }
      if (in.mask == kMaskNoAngle) th += (p.theta - t.theta).squaredNorm();
      if (in.mask == kMaskNoTension) ff += (p.f - t.f).squaredNorm();
      if (in.mask == kMaskNoLength) ll += (p.l - t.l).squaredNorm();
    }
  }
  const double n = static_cast<double>(data.size());
  r.theta = Rms(th, n * nj);
  r.f = Rms(ff, n * nm);
  r.l = Rms(ll, n * nm);
  for (int b = 0; b < 3; ++b) {
    r.reproduced[b] = Rms(rep[b], rep_n[b]);
    r.predicted[b] = Rms(pred[b], pred_n[b]);
  }
  return r;
}

std::vector<double> TrainOnData(StaticNet* net,
                                const std::vector<SensorTriple>& data,
                                uint64_t seed,
                                const StaticTrainOptions& options) {
  if (data.empty()) throw UsageError("no training data");
  const int n = static_cast<int>(data.size()) * 3;
  Eigen::MatrixXd x(net->input_dim(), n), y(net->output_dim(), n);
  for (size_t s = 0; s < data.size(); ++s) {
    const Eigen::VectorXd target = net->NormalizedTarget(data[s]);
    for (int mi = 0; mi < 3; ++mi) {
      SensorTriple in = data[s];
      in.mask = kTrainingMasks[mi];
      x.col(3 * s + mi) = net->NetworkInput(in);
      y.col(3 * s + mi) = target;
    }
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  nn::Adam adam(options.lr);
  std::vector<Eigen::Map<Eigen::VectorXd>> params;
  AppendAll(net->encoder(), net->decoder(), &params);
  nn::MlpGrad genc = net->encoder().ZeroGrad(), gdec = net->decoder().ZeroGrad();
  nn::MlpTape tenc, tdec;
  std::vector<double> history;
  const int batch = std::max(1, options.batch);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    const double frac = options.epochs > 1 ? double(epoch) / (options.epochs - 1) : 1.0;
    adam.set_lr(options.lr_final +
                0.5 * (options.lr - options.lr_final) * (1.0 + std::cos(M_PI * frac)));
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (int start = 0; start < n; start += batch) {
      const int b = std::min(batch, n - start);
      Eigen::MatrixXd xb(x.rows(), b), yb(y.rows(), b);
      for (int k = 0; k < b; ++k) {
        xb.col(k) = x.col(order[start + k]);
        yb.col(k) = y.col(order[start + k]);
      }
      Eigen::MatrixXd z = net->encoder().Forward(xb, &tenc);
      if (options.latent_noise > 0.0) {
        for (int i = 0; i < z.size(); ++i) z.data()[i] += options.latent_noise * noise(rng);
      }
      const Eigen::MatrixXd p = net->decoder().Forward(z, &tdec);
      const Eigen::MatrixXd diff = p - yb;
      total += diff.squaredNorm();
      const Eigen::MatrixXd dy = diff * (2.0 / (diff.rows() * b));
      genc.SetZero();
      gdec.SetZero();
      const Eigen::MatrixXd dz = net->decoder().Backward(tdec, dy, &gdec);
      net->encoder().Backward(tenc, dz, &genc);
      std::vector<Eigen::Map<const Eigen::VectorXd>> grads;
      nn::AppendGrads(genc, &grads);
      nn::AppendGrads(gdec, &grads);
      adam.Step(params, grads);
    }
    const double loss = total / (double(n) * y.rows());
    if (!std::isfinite(loss)) throw TrainingError("static schema loss diverged");
    history.push_back(loss);
  }
  return history;
}

StaticTrainReport TrainInitial(StaticNet* net, const ArmPlant& plant,
                               int n_samples, uint64_t seed,
                               const StaticTrainOptions& options) {
  if (n_samples < 1000) throw UsageError("train_initial needs n_samples >= 1000");
  if (net->n_joints() != plant.n_joints || net->n_muscles() != plant.n_muscles) {
    throw UsageError("schema and plant dimensions differ");
  }
  std::vector<SensorTriple> all = SampleEquilibria(plant, n_samples, seed, options.sampler);
  const int n_hold = std::max(1, static_cast<int>(std::lround(options.holdout * n_samples)));
  StaticTrainReport report;
  report.holdout_set.assign(all.end() - n_hold, all.end());
  report.train_set.assign(all.begin(), all.end() - n_hold);
  net->FitNormalization(report.train_set);
  report.loss_history = TrainOnData(net, report.train_set, seed ^ 0x9e3779b97f4a7c15ULL, options);
  report.holdout = EvaluateMasked(*net, report.holdout_set);
  return report;
}

double TrainOnline(StaticNet* net, const std::vector<SensorTriple>& batch,
                   const OnlineOptions& options) {
  if (batch.empty()) throw UsageError("online batch is empty");
  const nn::Mlp enc0 = net->encoder(), dec0 = net->decoder();
  const int n = static_cast<int>(batch.size()) * 3;
  Eigen::MatrixXd x(net->input_dim(), n), y(net->output_dim(), n);
  for (size_t s = 0; s < batch.size(); ++s) {
    const Eigen::VectorXd target = net->NormalizedTarget(batch[s]);
    for (int mi = 0; mi < 3; ++mi) {
      SensorTriple in = batch[s];
      in.mask = kTrainingMasks[mi];
      x.col(3 * s + mi) = net->NetworkInput(in);
      y.col(3 * s + mi) = target;
    }
  }
  nn::MlpGrad genc = net->encoder().ZeroGrad(), gdec = net->decoder().ZeroGrad();
  nn::MlpTape tenc, tdec;
  for (int step = 0; step < options.steps; ++step) {
    const Eigen::MatrixXd z = net->encoder().Forward(x, &tenc);
    const Eigen::MatrixXd p = net->decoder().Forward(z, &tdec);
    const Eigen::MatrixXd dy = (p - y) * (2.0 / (double(y.rows()) * n));
    genc.SetZero();
    gdec.SetZero();
    net->encoder().Backward(tenc, net->decoder().Backward(tdec, dy, &gdec), &genc);
    auto apply = [&](nn::Mlp& m, const nn::MlpGrad& g) {
      for (size_t k = 0; k < m.layers().size(); ++k) {
        m.layers()[k].w -= options.lr * g.w[k];
        m.layers()[k].b -= options.lr * g.b[k];
      }
    };
    apply(net->encoder(), genc);
    apply(net->decoder(), gdec);
  }
  const double de = net->encoder().ParameterDistance(enc0);
  const double dd = net->decoder().ParameterDistance(dec0);
  return std::sqrt(de * de + dd * dd);
}

Eigen::VectorXd PredictedStiffness(const ArmPlant& geometry,
                                   const Eigen::VectorXd& theta_ref,
                                   const Eigen::VectorXd& f) {
  const Eigen::MatrixXd g = MuscleJacobian(geometry, theta_ref);
  const Eigen::VectorXd slope = TensionSlope(geometry, f);
  return g.cwiseAbs2().transpose() * slope;
}

double LatentLoss(const StaticNet& net, const ArmPlant& geometry,
                  const Eigen::VectorXd& theta_ref,
                  const std::optional<Eigen::VectorXd>& k_ref,
                  const Eigen::VectorXd& z, const ControlOptions& options,
                  Eigen::VectorXd* grad) {
  if (geometry.n_joints != net.n_joints() || geometry.n_muscles != net.n_muscles()) {
    throw UsageError("control geometry does not match the schema");
  }
  std::vector<Eigen::VectorXd> acts;
  const Eigen::VectorXd y = net.decoder().Evaluate(z, &acts);
  const StaticPrediction p = net.Denormalize(y);
  const int nj = net.n_joints(), nm = net.n_muscles();

  const Eigen::VectorXd dtheta = p.theta - theta_ref;
  double loss = dtheta.squaredNorm() + options.w_f * p.f.squaredNorm();
  Eigen::VectorXd g_theta = 2.0 * dtheta;
  Eigen::VectorXd g_f = 2.0 * options.w_f * p.f;
  if (k_ref) {
    if (k_ref->size() != nj) throw UsageError("k_ref needs one entry per joint");
    const Eigen::MatrixXd g2 = MuscleJacobian(geometry, theta_ref).cwiseAbs2();
    const Eigen::VectorXd k = g2.transpose() * TensionSlope(geometry, p.f);
    const Eigen::VectorXd dk = k - *k_ref;
    loss += options.w_k * dk.squaredNorm();
    // d(2 sqrt(k f))/df = sqrt(k / f) for f > 0
    Eigen::VectorXd dslope = Eigen::VectorXd::Zero(nm);
    for (int i = 0; i < nm; ++i) {
      if (p.f[i] > 1e-9) dslope[i] = std::sqrt(geometry.elastic_k[i] / p.f[i]);
    }
    g_f += 2.0 * options.w_k * dslope.cwiseProduct(g2 * dk);
  }
  if (grad) {
    Eigen::VectorXd dphys = Eigen::VectorXd::Zero(net.output_dim());
    dphys.segment(0, nj) = g_theta;
    dphys.segment(nj, nm) = g_f;
    *grad = net.decoder().VectorJacobian(acts, dphys.cwiseProduct(net.scale()));
  }
  return loss;
}

ControlResult SolveControl(const StaticNet& net, const ArmPlant& geometry,
                           const Eigen::VectorXd& theta_ref,
                           const std::optional<Eigen::VectorXd>& k_ref,
                           const SensorTriple& current,
                           const ControlOptions& options) {
  if (options.iters < 1) throw UsageError("solve_control needs iters >= 1");
  if (theta_ref.size() != net.n_joints()) throw UsageError("theta_ref size mismatch");
  ControlResult result;
  SensorTriple start = current;
  // a fully observed state starts from the robot's own sensors (theta, f)
  if (start.mask == Mask{1, 1, 1}) start.mask = kMaskNoLength;
  Eigen::VectorXd z = net.Encode(start);
  Eigen::VectorXd grad;
  double loss = LatentLoss(net, geometry, theta_ref, k_ref, z, options, &grad);
  if (!std::isfinite(loss)) throw OptimizationError("non-finite control loss");
  result.loss_history.push_back(loss);
  double step = options.step;
  for (int it = 0; it < options.iters; ++it) {
    bool accepted = false;
    for (int h = 0; h <= options.max_halvings; ++h) {
      const Eigen::VectorXd trial = z - step * grad;
      Eigen::VectorXd trial_grad;
      const double trial_loss =
          LatentLoss(net, geometry, theta_ref, k_ref, trial, options, &trial_grad);
      if (!std::isfinite(trial_loss)) throw OptimizationError("non-finite control loss");
      if (trial_loss <= loss) {
        z = trial;
        loss = trial_loss;
        grad = trial_grad;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    result.loss_history.push_back(loss);
  }
  result.z = z;
  result.prediction = net.Decode(z);
  result.l_ref = result.prediction.l;
  if (options.length_readout) {
    const SensorTriple held{theta_ref, result.prediction.f, result.prediction.l,
                            kMaskNoLength};
    result.l_ref = net.Complete(held).l;
  }
  return result;
}

}  // namespace muskwheel
