// Copyright 2026 The ShadowTrack Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "shadowtrack/losses.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "shadowtrack/random.hpp"
#include "shadowtrack/simulator.hpp"

namespace shadowtrack {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

const double kDiag = std::exp(1.0) / (std::exp(1.0) + 1.0);

InstanceGroup<double> group(int id, PartKind kind, MatrixXd samples) {
  InstanceGroup<double> g;
  g.instance_id = id;
  g.kind = kind;
  g.samples = std::move(samples);
  return g;
}

using oracle::concat;
using oracle::flatten;
using oracle::random_matrix;
using oracle::random_stochastic;
using oracle::unflatten;

TEST(InstanceGroupTest, FiltersByStrictScoreThreshold) {
  std::vector<LocationSample<double>> samples{
      {VectorXd::Constant(2, 1.0), 0.05, 3},
      {VectorXd::Constant(2, 2.0), 0.06, 3},
      {VectorXd::Constant(2, 9.0), 0.9, 4}};
  const auto g = make_instance_group<double>(3, PartKind::kShadow, samples);
  ASSERT_EQ(g.size(), 1);
  EXPECT_EQ(g.samples(0, 0), 2.0);
  EXPECT_THROW(make_instance_group<double>(7, PartKind::kShadow, samples),
               std::invalid_argument);
}

TEST(CenterEmbeddingTest, Examples) {
  MatrixXd one(1, 2);
  one << 1, 0;
  EXPECT_EQ(center_embedding(group(0, PartKind::kObject, one)),
            VectorXd::Unit(2, 0));
  MatrixXd two(2, 2);
  two << 1, 0, 0, 1;
  EXPECT_TRUE(center_embedding(group(0, PartKind::kObject, two))
                  .isApprox(VectorXd::Constant(2, 0.5)));
  MatrixXd three(3, 2);
  three << 2, 0, 0, 2, 1, 1;
  EXPECT_TRUE(center_embedding(group(0, PartKind::kObject, three))
                  .isApprox(VectorXd::Constant(2, 1.0)));
}

TEST(CenterLossTest, IdenticalSamplesGiveZero) {
  MatrixXd same(3, 4);
  same.rowwise() = Eigen::RowVector4d(1, -2, 3, 0.5);
  const std::vector<InstanceGroup<double>> gs{group(0, PartKind::kShadow, same)};
  const auto loss = center_loss<double>(gs);
  EXPECT_EQ(loss.value, 0.0);
  EXPECT_TRUE(loss.gradient.isZero(0.0));
}

TEST(CenterLossTest, HandEvaluatedExample) {
  MatrixXd s(2, 2);
  s << 0, 0, 2, 0;
  const std::vector<InstanceGroup<double>> gs{group(0, PartKind::kShadow, s)};
  EXPECT_DOUBLE_EQ(center_loss<double>(gs).value, 2.0);
}

TEST(CenterLossTest, PermutationInvariantAndZeroOnlyWhenCollapsed) {
  Rng rng(2);
  MatrixXd s = random_matrix(rng, 6, 3);
  const std::vector<InstanceGroup<double>> a{group(0, PartKind::kShadow, s)};
  MatrixXd p = s;
  p.row(0).swap(p.row(4));
  p.row(2).swap(p.row(5));
  const std::vector<InstanceGroup<double>> b{group(0, PartKind::kShadow, p)};
  EXPECT_NEAR(center_loss<double>(a).value, center_loss<double>(b).value, 1e-12);
  EXPECT_GT(center_loss<double>(a).value, 0.0);
}

TEST(CenterLossTest, GradientMatchesFiniteDifferences) {
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<InstanceGroup<double>> gs{
        group(0, PartKind::kShadow, random_matrix(rng, 4, 3)),
        group(1, PartKind::kObject, random_matrix(rng, 3, 3))};
    VectorXd x = concat(flatten(gs[0].samples), flatten(gs[1].samples));
    auto f = [&](const VectorXd& v) {
      auto probe = gs;
      probe[0].samples = unflatten(v, 0, 4, 3);
      probe[1].samples = unflatten(v, 12, 3, 3);
      return center_loss<double>(probe).value;
    };
    const auto g = center_loss<double>(gs).gradient;
    EXPECT_LE(oracle::max_relative_error(g, oracle::numeric_gradient(f, x, 1e-6)),
              1e-4);
  }
}

TEST(SimilarityMatrixTest, Examples) {
  MatrixXd one(1, 3);
  one << 0.3, -1, 2;
  EXPECT_EQ(similarity_matrix(one), MatrixXd::Ones(1, 1));
  const MatrixXd s = similarity_matrix(MatrixXd::Identity(2, 2));
  EXPECT_NEAR(s(0, 0), kDiag, 1e-12);
  EXPECT_NEAR(s(0, 1), 1.0 - kDiag, 1e-12);
  EXPECT_NEAR(s(1, 1), kDiag, 1e-12);
  EXPECT_NEAR(s(0, 0), 0.7311, 1e-4);
}

TEST(StochasticMatrixTest, RowsSumToOneAndArePositive) {
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const int k = rng.uniform_int(1, 6), m = rng.uniform_int(1, 6);
    const MatrixXd c = random_matrix(rng, k, 5);
    const MatrixXd sim = similarity_matrix(c);
    const MatrixXd tr = transition_matrix(c, random_matrix(rng, m, 5), 0.1);
    EXPECT_LE((sim.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-9);
    EXPECT_LE((tr.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-9);
    EXPECT_GT(sim.minCoeff(), 0.0);
    EXPECT_GT(tr.minCoeff(), 0.0);
  }
}

TEST(ContrastLossTest, IdentityInputGivesZero) {
  const MatrixXd eye = MatrixXd::Identity(3, 3);
  Rng rng(1);
  EXPECT_EQ(contrast_loss<double>(eye, eye, random_matrix(rng, 3, 4),
                                  random_matrix(rng, 3, 4))
                .value,
            0.0);
}

TEST(ContrastLossTest, OrthonormalExample) {
  const MatrixXd c = MatrixXd::Identity(2, 2);
  const MatrixXd s = similarity_matrix(c);
  const double expected = 2.0 * (-2.0 * std::log(kDiag));
  EXPECT_NEAR(contrast_loss<double>(s, s, c, c).value, expected, 1e-12);
  EXPECT_NEAR(expected, 1.2530, 1e-4);
}

TEST(ContrastLossTest, DecreasesAsDiagonalGrows) {
  double previous = std::numeric_limits<double>::infinity();
  for (double a = 0.5; a <= 3.0; a += 0.25) {
    const MatrixXd c = a * MatrixXd::Identity(2, 2);
    const MatrixXd s = similarity_matrix(c);
    const double v = contrast_loss<double>(s, s, c, c).value;
    EXPECT_LT(v, previous);
    previous = v;
  }
}

TEST(ContrastLossTest, GradientMatchesFiniteDifferences) {
  Rng rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXd cs = random_matrix(rng, 3, 4);
    const MatrixXd co = random_matrix(rng, 2, 4);
    auto f = [&](const VectorXd& v) {
      const MatrixXd a = unflatten(v, 0, 3, 4), b = unflatten(v, 12, 2, 4);
      return contrast_loss<double>(similarity_matrix(a), similarity_matrix(b), a,
                                   b)
          .value;
    };
    const auto g = contrast_loss<double>(similarity_matrix(cs),
                                         similarity_matrix(co), cs, co)
                       .gradient;
    const VectorXd x = concat(flatten(cs), flatten(co));
    EXPECT_LE(oracle::max_relative_error(g, oracle::numeric_gradient(f, x, 1e-6)),
              1e-4);
  }
}

TEST(TransitionMatrixTest, Examples) {
  MatrixXd a(1, 2), b(1, 2);
  a << 1, 2;
  b << -3, 1;
  EXPECT_EQ(transition_matrix(a, b, 0.1), MatrixXd::Ones(1, 1));
  const MatrixXd t =
      transition_matrix(MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2), 1.0);
  EXPECT_NEAR(t(0, 0), kDiag, 1e-12);
  EXPECT_NEAR(t(1, 0), 1.0 - kDiag, 1e-12);
}

TEST(TransitionMatrixTest, ScaleInvariant) {
  Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    const MatrixXd a = random_matrix(rng, 3, 4), b = random_matrix(rng, 4, 4);
    MatrixXd as = a, bs = b;
    as.row(1) *= rng.uniform(0.1, 10.0);
    bs.row(2) *= rng.uniform(0.1, 10.0);
    EXPECT_LE((transition_matrix(a, b, 0.1) - transition_matrix(as, bs, 0.1))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
  }
}

TEST(TransitionMatrixTest, RejectsBadInput) {
  EXPECT_THROW(transition_matrix(MatrixXd::Identity(2, 2),
                                 MatrixXd::Identity(2, 2), 0.0),
               std::invalid_argument);
  EXPECT_THROW(transition_matrix(MatrixXd::Zero(1, 2), MatrixXd::Ones(1, 2), 1.0),
               std::invalid_argument);
}

TEST(CycleLossTest, IdentityGivesZeroAndStochasticIsNonNegative) {
  EXPECT_EQ(cycle_loss<double>(MatrixXd::Identity(3, 3),
                               MatrixXd::Identity(3, 3))
                .value,
            0.0);
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    const int m = rng.uniform_int(1, 5), n = rng.uniform_int(1, 5);
    EXPECT_GE(cycle_loss<double>(random_stochastic(rng, m, n),
                                 random_stochastic(rng, n, m))
                  .value,
              0.0);
  }
}

TEST(CycleLossTest, MatchedOrthogonalPairs) {
  const MatrixXd e = MatrixXd::Identity(2, 2);
  const MatrixXd a = transition_matrix(e, e, 1.0);
  // (S S)_ii = d^2 + (1 - d)^2 with d the softmax diagonal.
  const double p = kDiag * kDiag + (1 - kDiag) * (1 - kDiag);
  EXPECT_NEAR(cycle_loss<double>(a, a).value, -2.0 * std::log(p), 1e-12);
  EXPECT_NEAR(cycle_loss_from_embeddings<double>(e, e, 1.0).value,
              -2.0 * std::log(p), 1e-12);
}

TEST(CycleLossTest, GradientMatchesFiniteDifferences) {
  Rng rng(47);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXd af = random_stochastic(rng, 3, 4);
    const MatrixXd ab = random_stochastic(rng, 4, 3);
    auto f = [&](const VectorXd& v) {
      return cycle_loss<double>(unflatten(v, 0, 3, 4), unflatten(v, 12, 4, 3))
          .value;
    };
    const VectorXd x = concat(flatten(af), flatten(ab));
    EXPECT_LE(oracle::max_relative_error(cycle_loss<double>(af, ab).gradient,
                                         oracle::numeric_gradient(f, x, 1e-6)),
              1e-4);

    const MatrixXd et = random_matrix(rng, 3, 5), et1 = random_matrix(rng, 2, 5);
    auto fe = [&](const VectorXd& v) {
      return cycle_loss_from_embeddings<double>(unflatten(v, 0, 3, 5),
                                                unflatten(v, 15, 2, 5), 0.5)
          .value;
    };
    const VectorXd xe = concat(flatten(et), flatten(et1));
    EXPECT_LE(oracle::max_relative_error(
                  cycle_loss_from_embeddings<double>(et, et1, 0.5).gradient,
                  oracle::numeric_gradient(fe, xe, 1e-6)),
              1e-4);
  }
}

TEST(GradCheckTest, QuadraticIsExact) {
  Rng rng(4);
  const MatrixXd a = random_matrix(rng, 5, 5);
  const MatrixXd q = a * a.transpose();
  auto loss = [&](const VectorXd& x) {
    LossValue<double> out;
    out.value = 0.5 * x.dot(q * x);
    out.gradient = q * x;
    return out;
  };
  // Central differences have no truncation error on a quadratic, so a wide
  // step keeps cancellation out of the comparison.
  EXPECT_LE(grad_check<double>(loss, VectorXd::LinSpaced(5, -1, 1), 1e-2), 1e-10);
}

TEST(GradCheckTest, DetectsWrongGradient) {
  auto loss = [](const VectorXd& x) {
    LossValue<double> out;
    out.value = x.squaredNorm();
    out.gradient = x;  // should be 2x
    return out;
  };
  EXPECT_GT(grad_check<double>(loss, VectorXd::Ones(3), 1e-6), 0.4);
}

TEST(ScenarioLossTest, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ToyScenarioConfig config;
    config.instances = 3;
    config.samples = 3;
    config.dim = 4;
    config.seed = seed;
    const auto scenario = toy_scenario(config);
    for (const LossWeights w : {LossWeights{1, 0, 0}, LossWeights{0, 1, 0},
                                LossWeights{0, 0, 1}, LossWeights{0.3, 2, 5}}) {
      auto loss = [&](const VectorXd& x) {
        auto probe = scenario;
        probe.assign(x);
        return scenario_loss(probe, w, 0.1).total;
      };
      EXPECT_LE(grad_check<double>(loss, scenario.flatten(), 1e-6), 1e-4);
    }
  }
}

TEST(ScenarioLossTest, SingleKindScenario) {
  ToyScenarioConfig config;
  config.instances = 2;
  config.samples = 2;
  config.dim = 3;
  config.shadows = false;
  const auto scenario = toy_scenario(config);
  const auto loss = scenario_loss(scenario, LossWeights{}, 0.1);
  EXPECT_GT(loss.cycle, 0.0);
  EXPECT_EQ(loss.total.gradient.size(), scenario.parameter_count());
}

TEST(FitToyTest, ZeroStepsLeavesEmbeddingsUnchanged) {
  const auto scenario = toy_scenario({});
  FitOptions options;
  options.steps = 0;
  const auto fit = fit_toy(scenario, options);
  EXPECT_EQ(fit.scenario.flatten(), scenario.flatten());
  ASSERT_EQ(fit.loss_trace.size(), 1u);
}

TEST(FitToyTest, ConvergesAndIsDeterministic) {
  ToyScenarioConfig config;
  config.seed = 0;
  FitOptions options;
  options.steps = 300;
  const auto a = fit_toy(toy_scenario(config), options);
  const auto b = fit_toy(toy_scenario(config), options);
  EXPECT_EQ(a.loss_trace, b.loss_trace);
  ASSERT_EQ(a.loss_trace.size(), 301u);
  for (double v : a.loss_trace) EXPECT_TRUE(std::isfinite(v));
  EXPECT_LT(a.loss_trace.back(), a.loss_trace.front());
}

TEST(FitToyTest, DivergenceReportsStep) {
  FitOptions options;
  options.steps = 200;
  options.learning_rate = 1e200;
  try {
    fit_toy(toy_scenario({}), options);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_GE(e.step(), 1);
  }
}

}  // namespace
}  // namespace shadowtrack
