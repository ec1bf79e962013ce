#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "pqcd/detect.hpp"
#include "pqcd/rng.hpp"
#include "pqcd/signal_model.hpp"

namespace {

using pqcd::Channel;
using pqcd::ChannelMixture;
using pqcd::Pmf;
using pqcd::SignalModel;

// exact E[min(tau, horizon)] by walking the whole prefix tree of symbol
// sequences, the oracle the Monte Carlo estimators are checked against
class PathOracle {
 public:
  PathOracle(Pmf sampling_law, Pmf f, std::vector<Pmf> g, double b, int horizon)
      : law_(std::move(sampling_law)), f_(std::move(f)), g_(std::move(g)), b_(b),
        horizon_(horizon) {}

  double expected_capped_time() const {
    std::vector<double> s(g_.size(), 0.0);
    return walk(s, 0, 1.0);
  }

 private:
  double walk(const std::vector<double>& s, int t, double prob) const {
    if (prob == 0.0) return 0.0;
    double total = 0.0;
    for (int z = 0; z < law_.size(); ++z) {
      const double pz = prob * law_[z];
      if (pz == 0.0) continue;
      std::vector<double> next = s;
      double best = 0.0;
      for (std::size_t j = 0; j < g_.size(); ++j) {
        const double inc = pqcd::detail::clamped_llr(g_[j][z], f_[z]);
        next[j] = std::max(next[j] + inc, 0.0);
        best = std::max(best, next[j]);
      }
      const int now = t + 1;
      if (best >= b_ || now >= horizon_)
        total += pz * now;
      else
        total += walk(next, now, pz);
    }
    return total;
  }

  Pmf law_;
  Pmf f_;
  std::vector<Pmf> g_;
  double b_;
  int horizon_;
};

SignalModel binary_model() {
  SignalModel m;
  m.pre = pqcd::make_pmf({0.8, 0.2});
  m.post = {pqcd::make_pmf({0.2, 0.8})};
  m.prior = pqcd::uniform_pmf(1);
  return m;
}

SignalModel ternary_two_law_model() {
  SignalModel m;
  m.pre = pqcd::make_pmf({0.6, 0.25, 0.15});
  m.post = {pqcd::make_pmf({0.2, 0.45, 0.35}), pqcd::make_pmf({0.15, 0.2, 0.65})};
  m.prior = pqcd::uniform_pmf(2);
  return m;
}

TEST(Detect, StepFollowsTheClampedRecursion) {
  const Pmf f = pqcd::make_pmf({0.8, 0.2});
  const std::vector<Pmf> g = {pqcd::make_pmf({0.2, 0.8})};
  pqcd::GlrState st = pqcd::make_glr_state(1, 10.0);
  st = pqcd::glr_step(st, 1, f, g);
  EXPECT_NEAR(st.s[0], std::log(4.0), 1e-12);
  EXPECT_EQ(st.t, 1);
  EXPECT_FALSE(st.stopped);
  st = pqcd::glr_step(st, 0, f, g);
  EXPECT_NEAR(st.s[0], 0.0, 1e-12);  // the reflecting barrier absorbs the drop
  st = pqcd::glr_step(st, 1, f, g);
  st.b = 1.0;
  st = pqcd::glr_step(st, 1, f, g);
  EXPECT_TRUE(st.stopped);
}

TEST(Detect, StepSaturatesOnZeroProbabilitySymbols) {
  const Pmf f = pqcd::make_pmf({0.5, 0.0, 0.5});
  const std::vector<Pmf> g = {pqcd::make_pmf({0.2, 0.5, 0.3})};
  pqcd::GlrState st = pqcd::make_glr_state(1, 10.0);
  st = pqcd::glr_step(st, 1, f, g);
  EXPECT_EQ(st.s[0], 50.0);
  EXPECT_TRUE(st.stopped);

  const Pmf f2 = pqcd::make_pmf({0.3, 0.2, 0.5});
  const std::vector<Pmf> g2 = {pqcd::make_pmf({0.5, 0.5, 0.0})};
  pqcd::GlrState st2 = pqcd::make_glr_state(1, 10.0);
  st2 = pqcd::glr_step(st2, 2, f2, g2);
  EXPECT_EQ(st2.s[0], 0.0);
  EXPECT_FALSE(st2.stopped);
}

TEST(Detect, StepRejectsBadSymbols) {
  const Pmf f = pqcd::make_pmf({0.5, 0.5, 0.0});
  const std::vector<Pmf> g = {pqcd::make_pmf({0.2, 0.8, 0.0})};
  pqcd::GlrState st = pqcd::make_glr_state(1, 1.0);
  EXPECT_THROW(pqcd::glr_step(st, 3, f, g), std::invalid_argument);
  EXPECT_THROW(pqcd::glr_step(st, -1, f, g), std::invalid_argument);
  EXPECT_THROW(pqcd::glr_step(st, 2, f, g), std::invalid_argument);
  EXPECT_THROW(pqcd::make_glr_state(0, 1.0), std::invalid_argument);
}

TEST(Detect, FalseAlarmTimeMatchesPathEnumeration) {
  const SignalModel m = binary_model();
  const double b = 1.5;
  const int horizon = 12;
  const PathOracle oracle(m.pre, m.pre, m.post, b, horizon);
  const double exact = oracle.expected_capped_time();
  const pqcd::MonteCarloEstimate mc =
      pqcd::estimate_arl(m, pqcd::identity_channel(2), b, 4000, horizon, 7);
  EXPECT_NEAR(mc.estimate, exact, 3.0 * mc.halfwidth / 1.96 + 1e-9);
}

TEST(Detect, DetectionDelayMatchesPathEnumeration) {
  const SignalModel m = ternary_two_law_model();
  const double b = 1.0;
  const int horizon = 8;
  const pqcd::DetectionReport report =
      pqcd::estimate_ewadd(m, pqcd::identity_channel(3), b, 4000, 9, horizon);
  for (int i = 0; i < 2; ++i) {
    const PathOracle oracle(m.post[static_cast<std::size_t>(i)], m.pre, m.post, b, horizon);
    const double exact = oracle.expected_capped_time();
    const auto& est = report.wadd[static_cast<std::size_t>(i)];
    EXPECT_NEAR(est.estimate, exact, 3.0 * est.halfwidth / 1.96 + 1e-9) << "hypothesis " << i;
  }
  const double mix = 0.5 * (report.wadd[0].estimate + report.wadd[1].estimate);
  EXPECT_NEAR(report.ewadd, mix, 1e-12);
}

TEST(Detect, ZeroThresholdStopsImmediately) {
  const SignalModel m = binary_model();
  const pqcd::MonteCarloEstimate mc =
      pqcd::estimate_arl(m, pqcd::identity_channel(2), 0.0, 200, 1000, 3);
  EXPECT_EQ(mc.estimate, 1.0);
  EXPECT_EQ(mc.halfwidth, 0.0);
  EXPECT_EQ(mc.censored, 0);
}

TEST(Detect, RerunsWithTheSameSeedAreIdentical) {
  const SignalModel m = ternary_two_law_model();
  const Channel t = pqcd::identity_channel(3);
  const auto a = pqcd::estimate_arl(m, t, 2.0, 500, 10000, 21);
  const auto b = pqcd::estimate_arl(m, t, 2.0, 500, 10000, 21);
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.halfwidth, b.halfwidth);
  const auto ra = pqcd::estimate_ewadd(m, t, 2.0, 500, 21, 10000);
  const auto rb = pqcd::estimate_ewadd(m, t, 2.0, 500, 21, 10000);
  EXPECT_EQ(ra.ewadd, rb.ewadd);
  EXPECT_EQ(ra.wadd[0].estimate, rb.wadd[0].estimate);
  EXPECT_EQ(ra.wadd[1].estimate, rb.wadd[1].estimate);
}

TEST(Detect, DuplicatePostChangeLawsShareOneStatistic) {
  SignalModel m;
  m.pre = pqcd::make_pmf({0.7, 0.3});
  const Pmf g = pqcd::make_pmf({0.3, 0.7});
  m.post = {g, g};
  m.prior = pqcd::uniform_pmf(2);
  const pqcd::DetectionReport report =
      pqcd::estimate_ewadd(m, pqcd::identity_channel(2), 2.0, 400, 5, 10000);
  EXPECT_EQ(report.wadd[0].estimate, report.wadd[1].estimate);
  EXPECT_EQ(report.wadd[0].halfwidth, report.wadd[1].halfwidth);
  EXPECT_EQ(report.ewadd, report.wadd[0].estimate);
}

TEST(Detect, UninformativeSensorChangesNothingStatistically) {
  const SignalModel m1 = ternary_two_law_model();
  SignalModel m2;
  m2.pre = pqcd::make_pmf({0.5, 0.5});
  m2.post = {pqcd::make_pmf({0.3, 0.7}), pqcd::make_pmf({0.9, 0.1})};
  m2.prior = m1.prior;
  pqcd::DecentralizedModel dm;
  dm.sensors = {m1, m2};
  dm.prior = m1.prior;

  const std::vector<ChannelMixture> mixtures = {
      pqcd::single_channel_mixture(pqcd::identity_channel(3)),
      pqcd::single_channel_mixture(pqcd::deterministic_channel(1, {0, 0}))};
  const double b = 2.0;
  const pqcd::DetectionReport joint = pqcd::estimate_ewadd(dm, mixtures, b, 3000, 31, 100000);
  const pqcd::DetectionReport solo =
      pqcd::estimate_ewadd(m1, pqcd::identity_channel(3), b, 3000, 33, 100000);
  const double spread =
      3.0 * std::sqrt(std::pow(joint.ewadd_halfwidth / 1.96, 2.0) +
                      std::pow(solo.ewadd_halfwidth / 1.96, 2.0));
  EXPECT_NEAR(joint.ewadd, solo.ewadd, spread + 1e-9);
}

TEST(Detect, StoppingTimesAreMonotoneInTheThreshold) {
  // common random numbers: raising the threshold only ever extends a path
  const SignalModel m = ternary_two_law_model();
  const Channel t = pqcd::identity_channel(3);
  const auto arl_low = pqcd::estimate_arl(m, t, 1.0, 300, 100000, 41);
  const auto arl_high = pqcd::estimate_arl(m, t, 2.5, 300, 100000, 41);
  EXPECT_LE(arl_low.estimate, arl_high.estimate);
  const auto d_low = pqcd::estimate_ewadd(m, t, 1.0, 300, 41, 100000);
  const auto d_high = pqcd::estimate_ewadd(m, t, 2.5, 300, 41, 100000);
  EXPECT_LE(d_low.ewadd, d_high.ewadd);
}

TEST(Detect, CensoredPathsAreCountedAndCapped) {
  const SignalModel m = binary_model();
  const pqcd::MonteCarloEstimate mc =
      pqcd::estimate_arl(m, pqcd::identity_channel(2), 1e9, 50, 3, 13);
  EXPECT_EQ(mc.censored, 50);
  EXPECT_EQ(mc.estimate, 3.0);
  EXPECT_EQ(mc.halfwidth, 0.0);
}

TEST(Detect, DuplicatedChannelMixtureMatchesTheSingleChannel) {
  const SignalModel m = ternary_two_law_model();
  const Channel t = pqcd::identity_channel(3);
  ChannelMixture mix;
  mix.channels = {t, t};
  mix.weights = {0.5, 0.5};
  const pqcd::DetectionReport twice = pqcd::estimate_ewadd(m, mix, 2.0, 3000, 43, 100000);
  const pqcd::DetectionReport once = pqcd::estimate_ewadd(m, t, 2.0, 3000, 44, 100000);
  const double spread =
      3.0 * std::sqrt(std::pow(twice.ewadd_halfwidth / 1.96, 2.0) +
                      std::pow(once.ewadd_halfwidth / 1.96, 2.0));
  EXPECT_NEAR(twice.ewadd, once.ewadd, spread + 1e-9);
}

TEST(Detect, CalibratedThresholdReproducesAnInBandFalseAlarmRate) {
  const SignalModel m = ternary_two_law_model();
  const ChannelMixture mix = pqcd::single_channel_mixture(pqcd::identity_channel(3));
  const double gamma = 5.0;
  const double b = pqcd::calibrate_threshold(m, mix, gamma, 0.01, 47, 400, 100000);
  const double arl = pqcd::estimate_arl(m, mix, b, 400, 100000, 47).estimate;
  EXPECT_GE(arl, gamma);
  EXPECT_LE(arl, 1.2 * gamma);
}

TEST(Detect, CalibratedThresholdGrowsWithTheTarget) {
  const SignalModel m = ternary_two_law_model();
  const ChannelMixture mix = pqcd::single_channel_mixture(pqcd::identity_channel(3));
  const double b_small = pqcd::calibrate_threshold(m, mix, 5.0, 0.01, 53, 300, 100000);
  const double b_large = pqcd::calibrate_threshold(m, mix, 50.0, 0.01, 53, 300, 100000);
  EXPECT_LE(b_small, b_large);
}

TEST(Detect, CalibrationRejectsBadTargets) {
  const SignalModel m = ternary_two_law_model();
  const ChannelMixture mix = pqcd::single_channel_mixture(pqcd::identity_channel(3));
  EXPECT_THROW(pqcd::calibrate_threshold(m, mix, 1.0, 0.1, 1, 100, 1000), std::invalid_argument);
  EXPECT_THROW(pqcd::calibrate_threshold(m, mix, 10.0, 0.0, 1, 100, 1000), std::invalid_argument);
  EXPECT_THROW(pqcd::estimate_arl(m, mix, 1.0, 0, 1000, 1), std::invalid_argument);
}

}  // namespace
