#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "pqcd/pmf.hpp"
#include "pqcd/rng.hpp"

namespace {

using pqcd::Pmf;

// closed-form Bernoulli KL, the oracle for the general routine
double bernoulli_kl(double p, double q) {
  return p * std::log(p / q) + (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
}

Pmf random_pmf(pqcd::Rng& rng, int n) {
  Pmf q;
  q.p = pqcd::sample_simplex(rng, n);
  return q;
}

TEST(Pmf, ValidateRejectsBadInput) {
  EXPECT_THROW(pqcd::make_pmf({}), std::invalid_argument);
  EXPECT_THROW(pqcd::make_pmf({0.5, -0.1, 0.6}), std::invalid_argument);
  EXPECT_THROW(pqcd::make_pmf({0.5, 0.4}), std::invalid_argument);
  EXPECT_THROW(pqcd::make_pmf({0.5, std::nan("")}), std::invalid_argument);
  EXPECT_NO_THROW(pqcd::make_pmf({0.25, 0.75}));
}

TEST(Pmf, UniformSumsToOne) {
  const Pmf u = pqcd::uniform_pmf(7);
  ASSERT_EQ(u.size(), 7);
  double sum = 0.0;
  for (int i = 0; i < u.size(); ++i) {
    EXPECT_DOUBLE_EQ(u[i], 1.0 / 7.0);
    sum += u[i];
  }
  EXPECT_NEAR(sum, 1.0, 1e-15);
  EXPECT_THROW(pqcd::uniform_pmf(0), std::invalid_argument);
}

TEST(Pmf, KlMatchesBernoulliClosedForm) {
  const double expected = bernoulli_kl(0.3, 0.7);
  const Pmf a = pqcd::make_pmf({0.3, 0.7});
  const Pmf b = pqcd::make_pmf({0.7, 0.3});
  EXPECT_NEAR(pqcd::kl_divergence(a, b), expected, 1e-14);
}

TEST(Pmf, KlZeroConventions) {
  const Pmf a = pqcd::make_pmf({0.0, 1.0});
  const Pmf b = pqcd::make_pmf({0.5, 0.5});
  EXPECT_NEAR(pqcd::kl_divergence(a, b), std::log(2.0), 1e-14);
  EXPECT_TRUE(std::isinf(pqcd::kl_divergence(b, a)));
  EXPECT_EQ(pqcd::kl_divergence(a, a), 0.0);
}

TEST(Pmf, KlNonnegativeOnRandomPairs) {
  pqcd::Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_below(5));
    const Pmf a = random_pmf(rng, n);
    const Pmf b = random_pmf(rng, n);
    EXPECT_GE(pqcd::kl_divergence(a, b), 0.0);
    EXPECT_NEAR(pqcd::kl_divergence(a, a), 0.0, 1e-15);
  }
}

TEST(Pmf, Distances) {
  const Pmf a = pqcd::make_pmf({0.2, 0.8});
  const Pmf b = pqcd::make_pmf({0.5, 0.5});
  EXPECT_NEAR(pqcd::l1_distance(a, b), 0.6, 1e-15);
  EXPECT_NEAR(pqcd::linf_distance(a, b), 0.3, 1e-15);
  EXPECT_THROW(pqcd::l1_distance(a, pqcd::uniform_pmf(3)), std::invalid_argument);
}

TEST(Rng, DerivedStreamsDifferAndReproduce) {
  pqcd::Rng a(pqcd::derive_seed(42, 0));
  pqcd::Rng b(pqcd::derive_seed(42, 1));
  pqcd::Rng a2(pqcd::derive_seed(42, 0));
  EXPECT_NE(a.next_u64(), b.next_u64());
  pqcd::Rng a3(pqcd::derive_seed(42, 0));
  EXPECT_EQ(a3.next_u64(), a2.next_u64());
}

TEST(Rng, SampleIndexRespectsSupport) {
  pqcd::Rng rng(3);
  const std::vector<double> w = {0.0, 0.7, 0.0, 0.3};
  for (int i = 0; i < 200; ++i) {
    const int idx = pqcd::sample_index(rng, w);
    EXPECT_TRUE(idx == 1 || idx == 3);
  }
}

TEST(Rng, SampleSimplexIsDistribution) {
  pqcd::Rng rng(5);
  const std::vector<double> v = pqcd::sample_simplex(rng, 6);
  double sum = 0.0;
  for (double x : v) {
    EXPECT_GT(x, 0.0);
    sum += x;
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

}  // namespace
