#include "mafl/training.hpp"

#include <gtest/gtest.h>

#include "mafl/autodiff.hpp"

using namespace mafl;

namespace {

LabeledDataset one_point(Vec x) {
  LabeledDataset ds;
  ds.label_count = 1;
  ds.features = {std::move(x)};
  ds.labels = {0};
  return ds;
}

LabeledDataset random_points(int n, int dim, uint64_t seed) {
  LabeledDataset ds;
  ds.label_count = 2;
  auto rng = stream_rng(seed);
  for (int p = 0; p < n; ++p) {
    Vec x(dim);
    for (double& v : x) v = gaussian(rng);
    ds.features.push_back(x);
    ds.labels.push_back(p % 2);
  }
  return ds;
}

}  // namespace

TEST(RegularizedLoss, ZeroDisplacementIsPlainMean) {
  auto loss = quadratic_loss(2);
  auto ds = random_points(5, 2, 1);
  Vec w{0.3, -0.2};
  EXPECT_DOUBLE_EQ(regularized_loss(w, w, 3.0, loss, ds),
                   regularized_loss(w, w, 0.0, loss, ds));
}

TEST(RegularizedLoss, HandValue) {
  // L = 0.5 ||w - x||^2 with x = 0: w=[1], w0=[0], rho=1 -> 0.5 + 0.5 = 1.0
  auto loss = quadratic_loss(1);
  auto ds = one_point({0.0});
  EXPECT_DOUBLE_EQ(regularized_loss({1.0}, {0.0}, 1.0, loss, ds), 1.0);
}

TEST(RegularizedLoss, RhoMonotone) {
  auto loss = quadratic_loss(3);
  auto ds = random_points(8, 3, 2);
  Vec w{1.0, 0.0, -1.0}, w0{0.0, 0.0, 0.0};
  double prev = -1e300;
  for (double rho : {0.0, 0.1, 1.0, 10.0}) {
    const double v = regularized_loss(w, w0, rho, loss, ds);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(RegularizedGradient, HandValue) {
  // grad = w (for quadratic about x=0) + rho (w - w0); w = w0 = [1], rho=1 -> [1]
  auto loss = quadratic_loss(1);
  auto ds = one_point({0.0});
  Vec g = regularized_gradient({1.0}, {1.0}, 1.0, loss, ds);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_DOUBLE_EQ(g[0], 1.0);
}

TEST(RegularizedGradient, MatchesFiniteDifferences) {
  for (auto [loss, dim] : {std::pair{quadratic_loss(4), 4}, std::pair{logistic_loss(3, 3), 12}}) {
    auto ds = random_points(6, loss.dim == 4 ? 4 : 3, 3);
    auto rng = stream_rng(17, static_cast<uint64_t>(dim));
    for (int trial = 0; trial < 100; ++trial) {
      Vec w(dim), w0(dim);
      for (double& v : w) v = gaussian(rng);
      for (double& v : w0) v = gaussian(rng);
      const double rho = 0.5;
      Vec g = regularized_gradient(w, w0, rho, loss, ds);
      Vec fd = fd_gradient(
          [&](const Vec& ww) { return regularized_loss(ww, w0, rho, loss, ds); }, w, 1e-6);
      for (int k = 0; k < dim; ++k) {
        EXPECT_LT(rel_diff(g[k], fd[k], 1e-6), 1e-5) << "coord " << k;
      }
    }
  }
}

TEST(LocalTrain, SingleStepHandValue) {
  // Quadratic about x=0: grad at w=1 is 1; + rho (w - w0) = 0. Step 0.1 -> 0.9.
  auto loss = quadratic_loss(1);
  auto ds = one_point({0.0});
  ModelState w0{{1.0}, 0, 0};
  auto [wf, trace] = local_train(w0, 1, 1, 0.1, 1.0, loss, ds, 5);
  EXPECT_NEAR(wf.weights[0], 0.9, 1e-15);
  ASSERT_EQ(trace.gradients.size(), 1u);
}

TEST(LocalTrain, RecursionExactAndTelescoping) {
  auto loss = logistic_loss(4, 3);
  auto ds = random_points(20, 4, 6);
  for (int& y : const_cast<std::vector<int>&>(ds.labels)) y %= 3;
  const_cast<LabeledDataset&>(ds).label_count = 3;
  ModelState w0{Vec(loss.dim, 0.1), 0, 0};
  auto [wf, trace] = local_train(w0, 5, 7, 0.05, 0.3, loss, ds, 8);
  ASSERT_EQ(trace.iterates.size(), 6u);
  for (int l = 0; l < 5; ++l) {
    Vec expect = trace.iterates[l];
    axpy(-0.05, trace.gradients[l], expect);
    EXPECT_EQ(expect, trace.iterates[l + 1]);  // recursion to machine precision
  }
  // sum_l eta g_l == w0 - wF
  Vec acc(loss.dim, 0.0);
  for (const auto& g : trace.gradients) axpy(0.05, g, acc);
  EXPECT_LT(max_abs_diff(acc, sub(w0.weights, wf.weights)), 1e-14);
  EXPECT_LT(max_abs_diff(trace.update_sum(), acc), 1e-14);
}

TEST(LocalTrain, DeterministicUnderSeed) {
  auto loss = quadratic_loss(3);
  auto ds = random_points(15, 3, 7);
  ModelState w0{{0.5, -0.5, 0.0}, 0, 0};
  auto [a, ta] = local_train(w0, 4, 5, 0.1, 0.0, loss, ds, 21);
  auto [b, tb] = local_train(w0, 4, 5, 0.1, 0.0, loss, ds, 21);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(ta.batch_indices, tb.batch_indices);
  auto [c, tc] = local_train(w0, 4, 5, 0.1, 0.0, loss, ds, 22);
  EXPECT_NE(ta.batch_indices, tc.batch_indices);
}

TEST(LocalTrain, BatchWithoutReplacement) {
  auto loss = quadratic_loss(2);
  auto ds = random_points(10, 2, 8);
  auto [wf, trace] = local_train({{0.0, 0.0}, 0, 0}, 3, 10, 0.01, 0.0, loss, ds, 1);
  for (const auto& batch : trace.batch_indices) {
    std::set<int> uniq(batch.begin(), batch.end());
    EXPECT_EQ(uniq.size(), batch.size());
  }
  EXPECT_THROW(local_train({{0.0, 0.0}, 0, 0}, 1, 11, 0.01, 0.0, loss, ds, 1),
               std::invalid_argument);
}

TEST(Aggregate, MidpointAndConvexity) {
  ModelState g{{0.0, 2.0}, 0, 4};
  ModelState l{{2.0, 0.0}, 0, 2};
  auto m = aggregate(g, l, 0.5);
  EXPECT_EQ(m.weights, (Vec{1.0, 1.0}));
  EXPECT_EQ(m.version, 5);
  auto near_g = aggregate(g, l, 1e-12);
  EXPECT_NEAR(near_g.weights[0], 0.0, 1e-11);
  auto q = aggregate({{4.0}, 0, 0}, {{0.0}, 0, 0}, 0.25);
  EXPECT_DOUBLE_EQ(q.weights[0], 3.0);
  // coordinate-wise inside [min, max] of the inputs
  auto rng = stream_rng(31);
  for (int t = 0; t < 50; ++t) {
    Vec a{gaussian(rng), gaussian(rng)}, b{gaussian(rng), gaussian(rng)};
    const double alpha = uniform01(rng);
    auto r = aggregate({a, 0, 0}, {b, 0, 0}, alpha);
    for (int k = 0; k < 2; ++k) {
      EXPECT_GE(r.weights[k], std::min(a[k], b[k]) - 1e-12);
      EXPECT_LE(r.weights[k], std::max(a[k], b[k]) + 1e-12);
    }
  }
  EXPECT_THROW(aggregate({{1.0}, 0, 0}, {{1.0, 2.0}, 0, 0}, 0.5), std::invalid_argument);
}

TEST(GlobalLoss, DeviceMeanOfMeans) {
  auto loss = quadratic_loss(1);
  // Device losses 1.0 and 3.0 -> mean 2.0. Quadratic about x: w=0, points at
  // sqrt(2) (loss 1) and sqrt(6) (loss 3).
  LabeledDataset d1 = one_point({std::sqrt(2.0)});
  LabeledDataset d2 = one_point({std::sqrt(6.0)});
  EXPECT_NEAR(global_loss({0.0}, {d1, d2}, loss), 2.0, 1e-12);

  // Unequal sizes: matches the mean-of-means definition, not the pooled mean.
  auto big = random_points(9, 1, 10);
  auto small = random_points(2, 1, 11);
  const Vec w{0.7};
  double exp_val = 0.0;
  for (const auto& part : {big, small}) {
    double s = 0.0;
    for (std::size_t p = 0; p < part.size(); ++p) s += loss.loss(w, part.features[p], 0);
    exp_val += s / part.size();
  }
  exp_val /= 2.0;
  EXPECT_NEAR(global_loss(w, {big, small}, loss), exp_val, 1e-12);
}

TEST(GlobalGradient, MatchesFiniteDifference) {
  auto loss = logistic_loss(3, 2);
  auto p1 = random_points(5, 3, 12);
  auto p2 = random_points(3, 3, 13);
  Vec w(loss.dim, 0.2);
  Vec g = global_gradient(w, {p1, p2}, loss);
  Vec fd = fd_gradient([&](const Vec& ww) { return global_loss(ww, {p1, p2}, loss); }, w);
  for (std::size_t k = 0; k < w.size(); ++k) EXPECT_LT(rel_diff(g[k], fd[k], 1e-8), 1e-5);
}
