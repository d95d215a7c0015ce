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

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "gtest/gtest.h"
#include "muskwheel/core/errors.h"
#include "muskwheel/plant/arm_plant.h"
#include "muskwheel/reflex/relaxation.h"
#include "muskwheel/schema/static_schema.h"

namespace muskwheel {
namespace {

// One trained schema shared by the suite; training takes ~20 s.
class StaticSchemaTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    plant_ = new ArmPlant(ArmPlant::Default());
    net_ = new StaticNet(StaticNet::Shape{}, 1);
    report_ = new StaticTrainReport(TrainInitial(net_, *plant_, 4000, 7));
  }
  static void TearDownTestSuite() {
    delete report_;
    delete net_;
    delete plant_;
  }

  // A co-contracted posture of the plant, fully observed.
  static SensorTriple Current(const Eigen::VectorXd& theta, double floor) {
    RelaxProblem qp = HoldingProblem(*plant_, theta, floor);
    const Eigen::VectorXd f = SolveNecessaryTension(qp).x;
    const Eigen::VectorXd l =
        MuscleLengths(*plant_, theta) - f.cwiseQuotient(plant_->elastic_k).cwiseSqrt();
    const Equilibrium eq = QuasiStaticSolve(*plant_, l, Eigen::VectorXd::Zero(2));
    return {eq.theta, eq.tension, l, {1, 1, 1}};
  }

  static ArmPlant* plant_;
  static StaticNet* net_;
  static StaticTrainReport* report_;
};

ArmPlant* StaticSchemaTest::plant_ = nullptr;
StaticNet* StaticSchemaTest::net_ = nullptr;
StaticTrainReport* StaticSchemaTest::report_ = nullptr;

// ----- sampler ----- //

TEST(SampleEquilibria, TriplesAreEquilibria) {
  const ArmPlant p = ArmPlant::Default();
  const auto data = SampleEquilibria(p, 50, 3);
  ASSERT_EQ(data.size(), 50u);
  for (const SensorTriple& t : data) {
    EXPECT_TRUE(p.WithinLimits(t.theta));
    const Eigen::VectorXd stretch = MuscleStretch(p, t.theta, t.l);
    EXPECT_LT((ElasticTension(p, stretch) - t.f).cwiseAbs().maxCoeff(), 1e-9);
    const Eigen::VectorXd torque =
        MuscleTorque(p, t.theta, t.f) + GravityTorque(p, t.theta);
    EXPECT_LT(torque.norm(), 1e-6);
  }
}

TEST(SampleEquilibria, SameSeedSameData) {
  const ArmPlant p = ArmPlant::Default();
  const auto a = SampleEquilibria(p, 20, 11), b = SampleEquilibria(p, 20, 11);
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].theta, b[i].theta);
    EXPECT_EQ(a[i].l, b[i].l);
  }
}

// ----- training and completion ----- //

TEST_F(StaticSchemaTest, HeldOutCompletionMeetsThresholds) {
  EXPECT_LT(report_->holdout.theta, 0.05);
  EXPECT_LT(report_->holdout.l, 2e-3);
  EXPECT_LT(report_->holdout.f, 3.0);
  EXPECT_GT(report_->loss_history.front(), report_->loss_history.back());
}

TEST_F(StaticSchemaTest, ProvidedBlocksReproducedBetterThanPredicted) {
  for (int b = 0; b < 3; ++b) {
    EXPECT_LT(report_->holdout.reproduced[b], report_->holdout.predicted[b]) << b;
  }
}

TEST_F(StaticSchemaTest, UnknownMaskIsUsageError) {
  SensorTriple t = report_->holdout_set[0];
  t.mask = {1, 0, 0};
  EXPECT_THROW(net_->Complete(t), UsageError);
  t.mask = {1, 1, 1};
  EXPECT_THROW(net_->Complete(t), UsageError);
}

TEST_F(StaticSchemaTest, ReferencePostureLengthIsNearRest) {
  // near-slack holding tensions at theta = 0; only the flexor against
  // gravity carries load
  SensorTriple t = Current(Eigen::VectorXd::Zero(2), 1.0);
  t.mask = kMaskNoLength;
  const StaticPrediction p = net_->Complete(t);
  EXPECT_LT((p.l - t.l).cwiseAbs().maxCoeff(), 2e-3);
  for (int i = 0; i < 4; ++i) {
    if (t.f[i] < 1.5) EXPECT_LT(std::abs(p.l[i] - plant_->rest_lengths[i]), 2e-3);
  }
}

TEST_F(StaticSchemaTest, AngleFromMeasuredTensionsAndLengths) {
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    SensorTriple t = report_->holdout_set[i];
    t.mask = kMaskNoAngle;
    worst = std::max(worst, (net_->Complete(t).theta - t.theta).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 0.05);
}

TEST_F(StaticSchemaTest, TensionCycleRecoversAngle) {
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    SensorTriple t = report_->holdout_set[i];
    t.mask = kMaskNoTension;
    const StaticPrediction p = net_->Complete(t);
    SensorTriple back{Eigen::VectorXd::Zero(2), p.f, t.l, kMaskNoAngle};
    worst = std::max(worst, (net_->Complete(back).theta - t.theta).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 0.08);
}

// ----- latent control ----- //

TEST_F(StaticSchemaTest, LatentGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> angle(-1.0, 1.0), stiff(0.5, 6.0);
  ControlOptions opt;
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    SensorTriple t = report_->holdout_set[trial];
    t.mask = kTrainingMasks[trial % 3];
    Eigen::VectorXd z = net_->Encode(t);
    for (int i = 0; i < z.size(); ++i) z[i] += 0.1 * gauss(rng);
    Eigen::VectorXd ref(2);
    ref << angle(rng), angle(rng);
    std::optional<Eigen::VectorXd> k;
    if (trial % 2) k = Eigen::VectorXd::Constant(2, stiff(rng));
    Eigen::VectorXd grad;
    LatentLoss(*net_, *plant_, ref, k, z, opt, &grad);
    const double h = 1e-5;
    for (int i = 0; i < z.size(); ++i) {
      Eigen::VectorXd zp = z, zm = z;
      zp[i] += h;
      zm[i] -= h;
      const double fd = (LatentLoss(*net_, *plant_, ref, k, zp, opt, nullptr) -
                         LatentLoss(*net_, *plant_, ref, k, zm, opt, nullptr)) /
                        (2 * h);
      const double scale = std::max(std::abs(fd), 1e-2 * grad.norm());
      EXPECT_LT(std::abs(grad[i] - fd), 1e-4 * scale) << trial << " " << i;
      ++checked;
    }
  }
  EXPECT_EQ(checked, 800);
}

TEST_F(StaticSchemaTest, ControlLossNeverIncreases) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> angle(-1.0, 1.0);
  const SensorTriple cur = Current(Eigen::Vector2d(0.2, -0.1), 5.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd ref(2);
    ref << angle(rng), angle(rng);
    std::optional<Eigen::VectorXd> k;
    if (trial % 2) k = Eigen::VectorXd::Constant(2, 3.0);
    const ControlResult r = SolveControl(*net_, *plant_, ref, k, cur);
    for (size_t i = 1; i < r.loss_history.size(); ++i) {
      EXPECT_LE(r.loss_history[i], r.loss_history[i - 1]);
    }
    EXPECT_LE(r.loss_history.back(), r.loss_history.front());
  }
}

TEST_F(StaticSchemaTest, HoldingPostureShedsCoContraction) {
  const SensorTriple cur = Current(Eigen::Vector2d(0.3, 0.4), 20.0);
  const ControlResult r = SolveControl(*net_, *plant_, cur.theta, std::nullopt, cur);
  const Equilibrium eq = QuasiStaticSolve(*plant_, r.l_ref, Eigen::VectorXd::Zero(2));
  EXPECT_LT((eq.theta - cur.theta).cwiseAbs().maxCoeff(), 0.05);
  EXPECT_LT(eq.tension.sum(), cur.f.sum());
  EXPECT_LT((r.l_ref - cur.l).cwiseAbs().maxCoeff(), 0.01);
}

TEST_F(StaticSchemaTest, HighStiffnessTargetCoContractsMore) {
  const SensorTriple cur = Current(Eigen::Vector2d(0.0, 0.0), 5.0);
  for (const Eigen::Vector2d ref : {Eigen::Vector2d(0.3, -0.2), Eigen::Vector2d(-0.5, 0.6)}) {
    const ControlResult lo =
        SolveControl(*net_, *plant_, ref, Eigen::VectorXd::Constant(2, 1.0), cur);
    const ControlResult hi =
        SolveControl(*net_, *plant_, ref, Eigen::VectorXd::Constant(2, 8.0), cur);
    const Equilibrium a = QuasiStaticSolve(*plant_, lo.l_ref, Eigen::VectorXd::Zero(2));
    const Equilibrium b = QuasiStaticSolve(*plant_, hi.l_ref, Eigen::VectorXd::Zero(2));
    EXPECT_LT((a.theta - b.theta).cwiseAbs().maxCoeff(), 0.03);
    EXPECT_GT(b.tension.sum(), a.tension.sum());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ka(JointStiffness(*plant_, a.theta, a.tension));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> kb(JointStiffness(*plant_, b.theta, b.tension));
    EXPECT_GT(kb.eigenvalues()[0], ka.eigenvalues()[0]);
  }
}

TEST_F(StaticSchemaTest, ClosedLoopReachesTargets) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> angle(-1.1, 1.1);
  const SensorTriple cur = Current(Eigen::Vector2d(0.0, 0.0), 5.0);
  int ok = 0;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd ref(2);
    ref << angle(rng), angle(rng);
    const ControlResult r = SolveControl(*net_, *plant_, ref, std::nullopt, cur);
    const Equilibrium eq = QuasiStaticSolve(*plant_, r.l_ref, Eigen::VectorXd::Zero(2));
    if ((eq.theta - ref).cwiseAbs().maxCoeff() < 0.05) ++ok;
  }
  EXPECT_GE(ok, 19);
}

TEST_F(StaticSchemaTest, MismatchedGeometryIsUsageError) {
  const ArmPlant grown = plant_->WithAddedMuscle(Eigen::Vector2d(-0.035, 0), 0.3, 1e6);
  EXPECT_THROW(SolveControl(*net_, grown, Eigen::VectorXd::Zero(2), std::nullopt,
                            report_->holdout_set[0]),
               UsageError);
}

// ----- growth ----- //

TEST_F(StaticSchemaTest, GrowthIsBitEqualOnOldChannels) {
  const StaticNet grown = net_->Grow(1, 99);
  EXPECT_EQ(grown.n_muscles(), 5);
  EXPECT_EQ(grown.input_dim(), 2 + 10 + 3);
  for (int i = 0; i < 30; ++i) {
    for (const Mask& m : kTrainingMasks) {
      SensorTriple t = report_->holdout_set[i];
      t.mask = m;
      SensorTriple g = t;
      g.f.conservativeResize(5);
      g.l.conservativeResize(5);
      g.f[4] = 0;
      g.l[4] = 0;
      const StaticPrediction a = net_->Complete(t);
      const StaticPrediction b = grown.Complete(g);
      EXPECT_EQ(a.theta, b.theta);
      EXPECT_EQ(a.f, b.f.head(4));
      EXPECT_EQ(a.l, b.l.head(4));
    }
  }
}

TEST_F(StaticSchemaTest, GrownSchemaRelearnsFivePlant) {
  const ArmPlant five = plant_->WithAddedMuscle(
      Eigen::Vector2d(-kAddedMuscleMomentArm, 0.0), plant_->rest_lengths[0], 1e6);
  StaticNet grown = net_->Grow(1, 5);
  StaticTrainOptions opt;
  opt.epochs = 60;
  const StaticTrainReport r = TrainInitial(&grown, five, 3000, 8, opt);
  EXPECT_LT(r.holdout.theta, 0.05);
  EXPECT_LT(r.holdout.l, 2e-3);
  EXPECT_LT(r.holdout.f, 3.0);
}

// ----- online learning ----- //

TEST_F(StaticSchemaTest, OnlineLearningAdaptsToStifferPlant) {
  StaticNet net = *net_;
  ArmPlant actual = *plant_;
  actual.elastic_k *= 1.3;
  const auto probe = SampleEquilibria(actual, 300, 41);
  const auto& nominal = report_->holdout_set;
  const double before = EvaluateMasked(net, probe).theta;
  const double nominal_before = EvaluateMasked(net, nominal).theta;
  for (int session = 0; session < 10; ++session) {
    TrainOnline(&net, SampleEquilibria(actual, 32, 500 + session));
  }
  const double after = EvaluateMasked(net, probe).theta;
  EXPECT_LT(after, before);
  // no catastrophic forgetting of the nominal plant
  EXPECT_LT(EvaluateMasked(net, nominal).theta, 2.0 * nominal_before);
}

TEST_F(StaticSchemaTest, OnlineStepOnFittedDataIsTiny) {
  StaticNet net = *net_;
  std::vector<SensorTriple> batch(report_->train_set.begin(),
                                  report_->train_set.begin() + 32);
  EXPECT_LT(TrainOnline(&net, batch), 1e-3);
}

TEST_F(StaticSchemaTest, EmptyOnlineBatchIsUsageError) {
  StaticNet net = *net_;
  EXPECT_THROW(TrainOnline(&net, {}), UsageError);
}

// ----- persistence ----- //

TEST_F(StaticSchemaTest, SaveLoadRoundTrip) {
  const std::string path =
      (std::filesystem::temp_directory_path() / "muskwheel_static_test.bin").string();
  net_->Save(path);
  const StaticNet back = StaticNet::Load(path);
  for (int i = 0; i < 10; ++i) {
    SensorTriple t = report_->holdout_set[i];
    t.mask = kMaskNoAngle;
    EXPECT_EQ(back.Complete(t).theta, net_->Complete(t).theta);
  }
  // truncated weights
  std::filesystem::resize_file(path, std::filesystem::file_size(path) / 2);
  EXPECT_THROW(StaticNet::Load(path), FormatError);
  std::filesystem::remove(path);
  std::filesystem::remove(path + ".json");
}

TEST(StaticNet, TrainInitialNeedsEnoughSamples) {
  StaticNet net(StaticNet::Shape{}, 1);
  EXPECT_THROW(TrainInitial(&net, ArmPlant::Default(), 999, 1), UsageError);
}

TEST(StaticNet, InputAndOutputDimensions) {
  StaticNet net(StaticNet::Shape{3, 7, 8, 16}, 2);
  EXPECT_EQ(net.input_dim(), 3 + 14 + 3);
  EXPECT_EQ(net.output_dim(), 3 + 14);
}

}  // namespace
}  // namespace muskwheel
