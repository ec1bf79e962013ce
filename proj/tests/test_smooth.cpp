#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "pqcd/design.hpp"
#include "pqcd/rng.hpp"
#include "pqcd/signal_model.hpp"
#include "pqcd/smooth.hpp"

namespace {

using pqcd::Channel;
using pqcd::SignalModel;

// central finite differences of a scalar channel functional, the oracle for
// the analytic gradients
template <typename F>
std::vector<double> fd_gradient(const Channel& t, F f, double h) {
  std::vector<double> grad(t.a.size());
  Channel plus = t, minus = t;
  for (std::size_t e = 0; e < t.a.size(); ++e) {
    plus.a[e] = t.a[e] + h;
    minus.a[e] = t.a[e] - h;
    grad[e] = (f(plus) - f(minus)) / (2.0 * h);
    plus.a[e] = t.a[e];
    minus.a[e] = t.a[e];
  }
  return grad;
}

double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    norm += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(norm), 1e-30);
}

// bisection on the simplex-projection threshold, independent of the sorting
// construction used by the implementation
std::vector<double> simplex_projection_oracle(const std::vector<double>& v) {
  double lo = -2.0, hi = 2.0;
  for (double x : v) {
    lo = std::min(lo, x - 2.0);
    hi = std::max(hi, x);
  }
  auto mass = [&](double theta) {
    double s = 0.0;
    for (double x : v) s += std::max(0.0, x - theta);
    return s;
  };
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mass(mid) > 1.0 ? lo : hi) = mid;
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(0.0, v[i] - 0.5 * (lo + hi));
  return out;
}

SignalModel identical_laws_model() {
  SignalModel m;
  m.pre = pqcd::make_pmf({0.6, 0.4});
  const pqcd::Pmf g = pqcd::make_pmf({0.2, 0.8});
  m.post = {g, g, g};
  m.prior = pqcd::uniform_pmf(3);
  return m;
}

TEST(Smooth, ThreeIdenticalImagesCountOnePointSevenFive) {
  // each merged gate contributes exactly 1/2: 1 + 1/2 + 1/4
  const SignalModel m = identical_laws_model();
  const Channel t = pqcd::identity_channel(2);
  EXPECT_NEAR(pqcd::smoothed_distinct_count(t, m, 1000.0, 1e-6), 1.75, 1e-12);
}

TEST(Smooth, SingleLawCountsOne) {
  const SignalModel m = pqcd::random_instance(3, 1, 5);
  EXPECT_DOUBLE_EQ(pqcd::smoothed_distinct_count(pqcd::identity_channel(3), m, 1000.0, 1e-6),
                   1.0);
}

TEST(Smooth, WellSeparatedImagesCountNearLawCount) {
  SignalModel m;
  m.pre = pqcd::uniform_pmf(3);
  m.post = {pqcd::make_pmf({0.98, 0.01, 0.01}), pqcd::make_pmf({0.01, 0.98, 0.01}),
            pqcd::make_pmf({0.01, 0.01, 0.98})};
  m.prior = pqcd::uniform_pmf(3);
  EXPECT_NEAR(pqcd::smoothed_distinct_count(pqcd::identity_channel(3), m, 1000.0, 1e-6), 3.0,
              0.01);
}

TEST(Smooth, ObjectiveGradientMatchesFiniteDifferences) {
  pqcd::Rng rng(61);
  const SignalModel m = pqcd::random_instance(3, 3, 62);
  for (int point = 0; point < 20; ++point) {
    const Channel t = pqcd::random_channel(3, 3, rng);
    const auto analytic = pqcd::detail::objective_gradient(t, m);
    const auto numeric = fd_gradient(
        t, [&](const Channel& c) { return pqcd::expected_kl_objective(c, m); }, 1e-6);
    EXPECT_LT(relative_error(analytic, numeric), 1e-4) << "point " << point;
  }
}

TEST(Smooth, CountGradientMatchesFiniteDifferences) {
  pqcd::Rng rng(63);
  const SignalModel m = pqcd::random_instance(3, 3, 64);
  const double k = 50.0, tau = 1e-4;
  for (int point = 0; point < 20; ++point) {
    const Channel t = pqcd::random_channel(3, 3, rng);
    const auto analytic = pqcd::detail::count_gradient(t, m, k, tau);
    const auto numeric = fd_gradient(
        t, [&](const Channel& c) { return pqcd::smoothed_distinct_count(c, m, k, tau); }, 1e-6);
    EXPECT_LT(relative_error(analytic, numeric), 1e-4) << "point " << point;
  }
}

TEST(Smooth, SimplexProjectionMatchesBisectionOracle) {
  pqcd::Rng rng(65);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(4);
    for (double& x : v) x = 4.0 * rng.next_double() - 2.0;
    const std::vector<double> expected = simplex_projection_oracle(v);
    std::vector<double> got = v;
    pqcd::detail::project_to_simplex(got);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(got[i], expected[i], 1e-10);
  }
}

TEST(Smooth, MergeProjectionIsFeasibleAndIdempotent) {
  const SignalModel m = pqcd::random_instance(3, 3, 67);
  pqcd::Partition part;
  part.block_of = {0, 0, 1};
  part.num_blocks = 2;
  pqcd::Rng rng(68);
  const Channel start = pqcd::random_channel(3, 3, rng);
  const Channel proj = pqcd::detail::project_to_merge_polytope(start, m, part);

  for (int x = 0; x < 3; ++x) {
    double col = 0.0;
    for (int y = 0; y < 3; ++y) {
      EXPECT_GE(proj.entry(y, x), -1e-12);
      col += proj.entry(y, x);
    }
    EXPECT_NEAR(col, 1.0, 1e-12);
  }
  const std::vector<pqcd::Pmf> images = pqcd::sanitized_images(proj, m);
  EXPECT_LE(pqcd::l1_distance(images[0], images[1]), 1e-9);

  const Channel again = pqcd::detail::project_to_merge_polytope(proj, m, part);
  for (std::size_t e = 0; e < proj.a.size(); ++e) EXPECT_NEAR(again.a[e], proj.a[e], 1e-10);
}

TEST(Smooth, FullBudgetStaysAtUnsanitizedOptimum) {
  const SignalModel m = pqcd::random_instance(3, 3, 71);
  const pqcd::DesignResult r = pqcd::auglag_design_ml(m, std::log2(3.0), {}, 4, 71);
  const double best = pqcd::unsanitized_objective(m);
  EXPECT_GE(r.value, best - 1e-9);
  EXPECT_LE(r.value, best + 1e-6);
}

TEST(Smooth, ResultIsRoundedFeasible) {
  const SignalModel m = pqcd::random_instance(3, 3, 73);
  const pqcd::DesignResult r = pqcd::auglag_design_ml(m, 1.0, {}, 6, 73);
  EXPECT_LE(r.partition.num_blocks, 2);
  EXPECT_TRUE(r.approximate);
  for (int x = 0; x < 3; ++x) {
    double col = 0.0;
    for (int y = 0; y < 3; ++y) col += r.channel.entry(y, x);
    EXPECT_NEAR(col, 1.0, 1e-12);
  }
  const std::vector<pqcd::Pmf> images = pqcd::sanitized_images(r.channel, m);
  pqcd::Partition induced = pqcd::induced_partition(images);
  EXPECT_LE(induced.num_blocks, 2);
}

TEST(Smooth, RejectsBadParameters) {
  const SignalModel m = pqcd::random_instance(3, 3, 79);
  EXPECT_THROW(pqcd::auglag_design_ml(m, 1.0, {}, 0, 1), std::invalid_argument);
  pqcd::SmoothParams p;
  p.tau = 0.0;
  EXPECT_THROW(pqcd::auglag_design_ml(m, 1.0, p, 2, 1), std::invalid_argument);
  p = {};
  p.rho_growth = 1.0;
  EXPECT_THROW(pqcd::auglag_design_ml(m, 1.0, p, 2, 1), std::invalid_argument);
}

TEST(Smooth, AllInfeasibleRestartsRaiseWithBestIterate) {
  // a frozen optimizer cannot merge anything, so a one-block budget must fail
  const SignalModel m = pqcd::random_instance(3, 3, 83);
  pqcd::SmoothParams p;
  p.outer_iters = 1;
  p.inner_iters = 1;
  p.step0 = 1e-300;
  try {
    pqcd::auglag_design_ml(m, 0.0, p, 2, 83);
    FAIL() << "expected AuglagError";
  } catch (const pqcd::AuglagError& e) {
    EXPECT_EQ(e.best_iterate.in_size, 3);
    EXPECT_EQ(e.best_iterate.out_size, 3);
    EXPECT_GT(e.smooth_count, 1.0);
  }
}

TEST(Smooth, TraceRecordsOuterIterations) {
  const SignalModel m = pqcd::random_instance(3, 3, 89);
  pqcd::AuglagDiagnostics diag;
  pqcd::SmoothParams p;
  p.outer_iters = 3;
  p.inner_iters = 50;
  const pqcd::DesignResult r = pqcd::auglag_design_ml(m, 1.0, p, 3, 89, &diag);
  EXPECT_GE(diag.best_restart, 0);
  EXPECT_FALSE(diag.trace.empty());
  EXPECT_LE(diag.trace.size(), 3u);
  EXPECT_GT(r.value, 0.0);
}

}  // namespace
