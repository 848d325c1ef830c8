// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "dualfield/checkpoint.hpp"
#include "dualfield/errors.hpp"
#include "dualfield/trainer.hpp"
#include "test_util.hpp"

namespace dualfield {
namespace {

TEST(NormalizedWeights, TwoScoredViews) {
  const std::vector<std::optional<double>> s = {1.0, 0.5};
  const auto w = compute_normalized_weights(s);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_NEAR(w[0], 4.0 / 3.0, 1e-12);
  EXPECT_NEAR(w[1], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR((w[0] + w[1]) / 2.0, 1.0, 1e-12);
}

TEST(NormalizedWeights, EqualScoresGiveExactlyOne) {
  for (double v : {0.1, 0.37, 0.9999}) {
    const std::vector<std::optional<double>> s(7, v);
    for (double w : compute_normalized_weights(s)) EXPECT_EQ(w, 1.0);
  }
}

TEST(NormalizedWeights, UnscoredViewsAreNeutral) {
  const std::vector<std::optional<double>> s = {std::nullopt, 0.2, std::nullopt, 0.6};
  const auto w = compute_normalized_weights(s);
  EXPECT_EQ(w[0], 1.0);
  EXPECT_EQ(w[2], 1.0);
  EXPECT_NEAR(w[1], 0.5, 1e-15);
  EXPECT_NEAR(w[3], 1.5, 1e-15);
  const std::vector<std::optional<double>> none(3);
  for (double x : compute_normalized_weights(none)) EXPECT_EQ(x, 1.0);
}

TEST(NormalizedWeights, DegenerateScoresThrow) {
  const std::vector<std::optional<double>> zeros = {0.0, 0.0};
  EXPECT_THROW(compute_normalized_weights(zeros), NormalizationError);
  const std::vector<std::optional<double>> negative = {0.5, -0.1};
  EXPECT_THROW(compute_normalized_weights(negative), PreconditionError);
}

TEST(RgbLoss, WeightedSumOfSquares) {
  const std::vector<Vec3> p = {Vec3(1, 0, 0), Vec3(0.5, 0.5, 0.5)};
  const std::vector<Vec3> t = {Vec3(0, 0, 0), Vec3(0.5, 0.0, 0.5)};
  const std::vector<double> w = {2.0, 0.5};
  EXPECT_DOUBLE_EQ(rgb_loss(p, t, w), 2.0 * 1.0 + 0.5 * 0.25);
  EXPECT_THROW(rgb_loss(p, t, std::vector<double>{1.0}), ContractError);
}

TEST(WeightedLoss, EqualScoresReproduceUnweightedLossBitForBit) {
  const EditDataset data = testing::tiny_dataset(4, 12);
  const RayTable table(data, RayOptions{});
  const DualFieldModel model = testing::random_model(GridResolution{6, 6, 6}, 3);
  const std::vector<std::optional<double>> scores(data.size(), 0.42);
  const auto weights = compute_normalized_weights(scores);
  const std::vector<double> ones(data.size(), 1.0);
  Rng r1(5), r2(5);
  const RayBatch weighted = sample_batch(data, table, 128, weights, r1);
  const RayBatch plain = sample_batch(data, table, 128, ones, r2);
  BackwardOptions opts;
  opts.n_samples = 16;
  const auto a = backward(model, weighted, opts);
  const auto b = backward(model, plain, opts);
  EXPECT_EQ(a.loss, b.loss);
  EXPECT_EQ(a.grads.values, b.grads.values);
}

TEST(SampleBatch, CarriesViewWeightsAndTargets) {
  EditDataset data = testing::tiny_dataset(3, 8);
  data.views[1].current = Image(8, 8, Vec3(0.25, 0.5, 0.75));
  const RayTable table(data, RayOptions{});
  const std::vector<double> weights = {0.5, 2.0, 1.0};
  Rng rng(1);
  const RayBatch batch = sample_batch(data, table, 500, weights, rng);
  ASSERT_EQ(batch.rays.size(), 500u);
  std::vector<int> seen(3, 0);
  for (const auto& r : batch.rays) {
    ASSERT_LT(r.view, 3u);
    ++seen[r.view];
    EXPECT_EQ(r.weight, weights[r.view]);
    if (r.view == 1) EXPECT_NEAR((r.target - Vec3(0.25, 0.5, 0.75)).norm(), 0.0, 1e-7);
  }
  for (int s : seen) EXPECT_GT(s, 100);
  Rng rng2(1);
  const RayBatch orig = sample_batch(data, table, 500, weights, rng2, ImageSource::kOriginal);
  for (std::size_t i = 0; i < orig.rays.size(); ++i) {
    EXPECT_EQ(orig.rays[i].view, batch.rays[i].view);
  }
}

TEST(Adam, MatchesHandComputedSteps) {
  std::vector<float> p = {1.0f, -2.0f};
  OptimizerState st(2, AdamHyperparameters{});
  const std::vector<double> g1 = {0.5, -1.0};
  adam_step(p, g1, st);
  // First bias-corrected step moves each parameter by lr * sign(g) (up to eps).
  EXPECT_NEAR(p[0], 1.0 - 0.01 * 0.5 / (0.5 + 1e-8), 1e-7);
  EXPECT_NEAR(p[1], -2.0 + 0.01 * 1.0 / (1.0 + 1e-8), 1e-7);
  const std::vector<double> g2 = {0.25, 0.0};
  adam_step(p, g2, st);
  const double m = 0.9 * 0.05 + 0.1 * 0.25, v = 0.999 * 0.00025 + 0.001 * 0.0625;
  const double mh = m / (1 - 0.81), vh = v / (1 - 0.998001);
  EXPECT_NEAR(p[0], 1.0 - 0.01 * 0.5 / (0.5 + 1e-8) - 0.01 * mh / (std::sqrt(vh) + 1e-8), 1e-6);
  EXPECT_EQ(st.step_count, 2);
  std::vector<double> bad = {1.0};
  EXPECT_THROW(adam_step(p, bad, st), ContractError);
}

TEST(TrainStatic, FitsTinySceneAndIsDeterministic) {
  const EditDataset data = testing::tiny_dataset(4, 16);
  TrainConfig cfg;
  cfg.iterations = 150;
  cfg.batch_size = 256;
  cfg.n_samples = 32;
  cfg.resolution = GridResolution{16, 16, 16};
  const DualFieldModel a = train_static(data, cfg);
  const DualFieldModel b = train_static(data, cfg);
  EXPECT_EQ(serialize_checkpoint(a), serialize_checkpoint(b));
  EXPECT_EQ(a.blend.t, 0);
  for (float v : a.dynamic_field.parameters()) ASSERT_EQ(v, 0.0f);

  const DualFieldModel init(cfg.resolution);
  TrainConfig zero = cfg;
  zero.iterations = 0;
  EXPECT_TRUE(train_static(data, zero).static_field == init.static_field);

  // Loss must fall substantially over training.
  RayTable table(data, cfg.rays);
  const std::vector<double> ones(data.size(), 1.0);
  Rng rng(3);
  const RayBatch batch = sample_batch(data, table, 512, ones, rng, ImageSource::kOriginal);
  BackwardOptions opts;
  opts.field = TrainedField::kStatic;
  opts.n_samples = 32;
  EXPECT_LT(backward(a, batch, opts).loss, 0.3 * backward(init, batch, opts).loss);
}

TEST(TrainLog, WritesHeaderAndRows) {
  const auto dir = testing::scratch_dir("trainlog");
  {
    TrainLog log(dir / "log.csv");
    log.append(1, 0.5, 0.0, 0.0, 1.0, std::nan(""));
    log.append(2, 0.25, 0.1, 0.1, 0.5, 0.8);
  }
  std::ifstream in(dir / "log.csv");
  std::string header, r1, r2;
  std::getline(in, header);
  std::getline(in, r1);
  std::getline(in, r2);
  EXPECT_EQ(header, "iteration,loss,w_sigma,w_c,gamma_used,temperature");
  EXPECT_EQ(r1, "1,0.5,0,0,1,");
  EXPECT_EQ(r2.substr(0, 2), "2,");
}

}  // namespace
}  // namespace dualfield
