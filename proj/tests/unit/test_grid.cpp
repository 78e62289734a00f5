#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "tres/error.hpp"
#include "tres/grid.hpp"

using namespace tres;

TEST(ImageGrid, RejectsInconsistentConstruction) {
  EXPECT_THROW(ImageGrid({2, 2}, {1.0, 2.0, 3.0}), InvalidInput);
  EXPECT_THROW(ImageGrid({2, 2, 2, 2}), InvalidInput);
  EXPECT_THROW(ImageGrid(Shape{}), InvalidInput);
  EXPECT_THROW(ImageGrid({0, 3}), InvalidInput);
  EXPECT_THROW(ImageGrid({2}, {1.0, std::nan("")}), InvalidInput);
}

TEST(ImageStack, RequiresSharedShape) {
  EXPECT_THROW(ImageStack({ImageGrid({2, 2}), ImageGrid({2, 3})}), InvalidInput);
  EXPECT_THROW(ImageStack(std::vector<ImageGrid>{}), InvalidInput);
}

TEST(SampleLinear, ReproducesNodes) {
  ImageGrid g({3, 4});
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = 0.1 * static_cast<double>(i * i);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) {
      const double p[] = {double(r), double(c)};
      EXPECT_DOUBLE_EQ(sample_linear(g, p), g[r * 4 + c]);
    }
}

TEST(SampleLinear, ZeroOutsideAndMidpoint) {
  ImageGrid g({5, 5}, std::vector<double>(25, 1.0));
  const double far[] = {-5.0, -5.0};
  EXPECT_EQ(sample_linear(g, far), 0.0);
  const double just_out[] = {4.0 + 1e-9, 2.0};
  EXPECT_EQ(sample_linear(g, just_out), 0.0);

  ImageGrid line({2}, {0.0, 1.0});
  const double mid[] = {0.5};
  EXPECT_DOUBLE_EQ(sample_linear(line, mid), 0.5);
}

TEST(SampleLinear, RejectsNonFinite) {
  ImageGrid g({2, 2});
  const double p[] = {std::nan(""), 0.0};
  EXPECT_THROW(sample_linear(g, p), InvalidInput);
  const double wrong_dim[] = {0.0};
  EXPECT_THROW(sample_linear(g, wrong_dim), InvalidInput);
}

TEST(SampleLinear, ContinuousAcrossCellBoundaries) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageGrid g({6, 7, 5});
  for (auto& v : g.values()) v = u(rng);
  for (std::size_t a = 0; a < 3; ++a) {
    for (double boundary = 1.0; boundary < 4.0; boundary += 1.0) {
      double lo[] = {2.3, 3.7, 1.4};
      double hi[] = {2.3, 3.7, 1.4};
      lo[a] = boundary - 1e-9;
      hi[a] = boundary + 1e-9;
      EXPECT_LT(std::abs(sample_linear(g, lo) - sample_linear(g, hi)), 1e-6);
    }
  }
}

TEST(QuantilePair, DocumentedEstimator) {
  const auto c = quantile_pair(std::vector<double>(9, 2.5), 0.1, 0.9);
  EXPECT_EQ(c.q0, 2.5);
  EXPECT_EQ(c.q1, 2.5);

  std::vector<double> ramp;
  for (int i = 0; i <= 10; ++i) ramp.push_back(i);
  const auto q = quantile_pair(ramp, 0.1, 0.9);
  EXPECT_DOUBLE_EQ(q.q0, 1.0);
  EXPECT_DOUBLE_EQ(q.q1, 9.0);

  const auto two = quantile_pair(std::vector<double>{3.0, 7.0}, 0.25, 0.75);
  EXPECT_DOUBLE_EQ(two.q0, 4.0);
  EXPECT_DOUBLE_EQ(two.q1, 6.0);
}

TEST(QuantilePair, Errors) {
  EXPECT_THROW(quantile_pair(std::vector<double>{}, 0.1, 0.9), InvalidInput);
  EXPECT_THROW(quantile_pair(std::vector<double>{1.0}, 0.9, 0.1), InvalidInput);
  EXPECT_THROW(quantile_pair(std::vector<double>{1.0}, 0.5, 0.5), InvalidInput);
  EXPECT_THROW(quantile_pair(std::vector<double>{1.0}, 0.0, 0.5), InvalidInput);
}

TEST(QuantilePair, PermutationInvariantAndHomogeneous) {
  std::mt19937 rng(11);
  std::normal_distribution<double> nd(0.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + trial % 37);
    for (auto& x : v) x = nd(rng);
    const double p0 = 0.05 + 0.4 * (trial % 7) / 7.0;
    const double p1 = p0 + 0.5;
    const auto ref = quantile_pair(v, p0, p1);
    std::shuffle(v.begin(), v.end(), rng);
    const auto shuffled = quantile_pair(v, p0, p1);
    EXPECT_EQ(ref.q0, shuffled.q0);
    EXPECT_EQ(ref.q1, shuffled.q1);
    EXPECT_LE(ref.q0, ref.q1);

    const double c = 0.25 + trial % 5;
    std::vector<double> scaled(v);
    for (auto& x : scaled) x *= c;
    const auto s = quantile_pair(scaled, p0, p1);
    EXPECT_NEAR(s.q0, c * ref.q0, 1e-12 * (1 + std::abs(c * ref.q0)));
    EXPECT_NEAR(s.q1, c * ref.q1, 1e-12 * (1 + std::abs(c * ref.q1)));
  }
}

TEST(PixelwiseQuantileRange, Examples) {
  ImageGrid a({3, 3}, std::vector<double>(9, 0.3));
  EXPECT_EQ(pixelwise_quantile_range(ImageStack({a, a, a}), 0.1, 0.9), ImageGrid({3, 3}));
  EXPECT_EQ(pixelwise_quantile_range(ImageStack({a}), 0.1, 0.9), ImageGrid({3, 3}));

  ImageGrid zero({4});
  ImageGrid one({4}, {1.0, 1.0, 1.0, 1.0});
  const auto r = pixelwise_quantile_range(ImageStack({zero, one}), 0.1, 0.9);
  for (double v : r.values()) EXPECT_NEAR(v, 0.8, 1e-15);
}

TEST(PixelwiseQuantileRange, NonNegativeAndZeroWhereAgreeing) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<ImageGrid> images(9, ImageGrid({5, 6}));
  for (auto& im : images)
    for (std::size_t p = 0; p < im.size(); ++p) im[p] = p % 4 == 0 ? 0.5 : u(rng);
  const auto r = pixelwise_quantile_range(ImageStack(images), 0.2, 0.7);
  for (std::size_t p = 0; p < r.size(); ++p) {
    EXPECT_GE(r[p], 0.0);
    if (p % 4 == 0) EXPECT_EQ(r[p], 0.0);
  }
}

TEST(PixelwiseReductions, MeanAndMedian) {
  ImageStack s({ImageGrid({2}, {0.0, 4.0}), ImageGrid({2}, {1.0, 5.0}), ImageGrid({2}, {5.0, 0.0}),
                ImageGrid({2}, {2.0, 1.0})});
  const auto mean = pixelwise_mean(s);
  EXPECT_DOUBLE_EQ(mean[0], 2.0);
  EXPECT_DOUBLE_EQ(mean[1], 2.5);
  const auto med = pixelwise_median(s);
  EXPECT_DOUBLE_EQ(med[0], 1.5);
  EXPECT_DOUBLE_EQ(med[1], 2.5);
}
