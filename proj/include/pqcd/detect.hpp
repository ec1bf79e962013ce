#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "pqcd/channel.hpp"
#include "pqcd/pmf.hpp"
#include "pqcd/rng.hpp"
#include "pqcd/signal_model.hpp"

namespace pqcd {

inline constexpr double kLlrClampNats = 50.0;
inline constexpr long long kDefaultHorizonCap = 1000000;

// GLR CuSum state: one clamped statistic per distinct post-change law
struct GlrState {
  std::vector<double> s;
  double b = 0.0;
  bool stopped = false;
  long long t = 0;

  double stat() const {
    double best = 0.0;
    for (double v : s) best = std::max(best, v);
    return best;
  }
};

inline GlrState make_glr_state(int num_hypotheses, double b) {
  if (num_hypotheses < 1)
    throw std::invalid_argument("make_glr_state: need at least one hypothesis");
  GlrState st;
  st.s.assign(static_cast<std::size_t>(num_hypotheses), 0.0);
  st.b = b;
  return st;
}

namespace detail {

// log(g/f) with saturation: impossible-under-f symbols alarm at +50 nats,
// impossible-under-g symbols push down at -50 nats (the zero clamp absorbs it)
inline double clamped_llr(double g, double f) {
  if (g > 0.0 && f > 0.0) return std::log(g / f);
  if (g > 0.0) return kLlrClampNats;
  if (f > 0.0) return -kLlrClampNats;
  return 0.0;
}

inline void glr_advance(GlrState& st, const std::vector<double>& increments) {
  for (std::size_t j = 0; j < st.s.size(); ++j)
    st.s[j] = std::max(st.s[j] + increments[j], 0.0);
  ++st.t;
  st.stopped = st.stat() >= st.b;
}

}  // namespace detail

// one observation through the clamped recursion S_j <- max(S_j + log(g_j/f), 0)
inline GlrState glr_step(GlrState state, int y, const Pmf& f_tilde,
                         const std::vector<Pmf>& g_tilde) {
  if (state.s.size() != g_tilde.size())
    throw std::invalid_argument("glr_step: state/hypothesis count mismatch");
  if (y < 0 || y >= f_tilde.size()) throw std::invalid_argument("glr_step: symbol out of range");
  bool possible = f_tilde[y] > 0.0;
  for (const Pmf& g : g_tilde) possible = possible || g[y] > 0.0;
  if (!possible)
    throw std::invalid_argument("glr_step: observed symbol has probability zero under every law");
  std::vector<double> inc(state.s.size());
  for (std::size_t j = 0; j < g_tilde.size(); ++j)
    inc[j] = detail::clamped_llr(g_tilde[j][y], f_tilde[y]);
  detail::glr_advance(state, inc);
  return state;
}

struct MonteCarloEstimate {
  double estimate = 0.0;
  double halfwidth = 0.0;  // 95% normal-approximation confidence halfwidth
  long long censored = 0;
};

struct DetectionReport {
  double arl_estimate = 0.0;
  double arl_halfwidth = 0.0;
  long long arl_censored = 0;
  std::vector<MonteCarloEstimate> wadd;  // one per post-change hypothesis
  double ewadd = 0.0;
  double ewadd_halfwidth = 0.0;
  long long trials = 0;
  long long horizon = 0;
  double threshold = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {

// compensated accumulator so aggregation order never shifts the result
struct NeumaierSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

// everything the per-step simulation needs, with duplicate post-change laws
// collapsed into classes that share one statistic
struct SimTables {
  std::vector<std::vector<Pmf>> f_img;               // [sensor][channel]
  std::vector<std::vector<std::vector<Pmf>>> g_img;  // [sensor][channel][hypothesis]
  std::vector<std::vector<std::vector<std::vector<double>>>> llr;  // [sensor][channel][class][z]
  std::vector<int> class_of;    // hypothesis -> class
  std::vector<int> class_rep;   // class -> first hypothesis with that law
  int num_classes = 0;
  int num_hypotheses = 0;
};

inline SimTables build_sim_tables(const DecentralizedModel& dm,
                                  const std::vector<ChannelMixture>& mixtures) {
  validate_decentralized_model(dm);
  if (mixtures.size() != dm.sensors.size())
    throw std::invalid_argument("detection: one channel mixture per sensor required");
  SimTables tab;
  const int num_sensors = static_cast<int>(dm.sensors.size());
  const int n = static_cast<int>(dm.prior.size());
  tab.num_hypotheses = n;
  for (int k = 0; k < num_sensors; ++k) {
    const SignalModel& sensor = dm.sensors[static_cast<std::size_t>(k)];
    const ChannelMixture& mix = mixtures[static_cast<std::size_t>(k)];
    validate_channel_mixture(mix);
    if (mix.channels[0].in_size != sensor.alphabet_size())
      throw std::invalid_argument("detection: mixture/model alphabet mismatch");
    std::vector<Pmf> f_per_channel;
    std::vector<std::vector<Pmf>> g_per_channel;
    for (const Channel& t : mix.channels) {
      f_per_channel.push_back(apply_channel(t, sensor.pre));
      std::vector<Pmf> g_list;
      for (int i = 0; i < n; ++i)
        g_list.push_back(apply_channel(t, sensor.post[static_cast<std::size_t>(i)]));
      g_per_channel.push_back(std::move(g_list));
    }
    tab.f_img.push_back(std::move(f_per_channel));
    tab.g_img.push_back(std::move(g_per_channel));
  }

  // hypotheses with identical images under every sensor and channel are one class
  tab.class_of.assign(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < static_cast<int>(tab.class_rep.size()); ++c) {
      const int rep = tab.class_rep[static_cast<std::size_t>(c)];
      bool same = true;
      for (int k = 0; k < num_sensors && same; ++k)
        for (std::size_t ch = 0; ch < tab.g_img[static_cast<std::size_t>(k)].size() && same; ++ch)
          same = l1_distance(tab.g_img[static_cast<std::size_t>(k)][ch][static_cast<std::size_t>(i)],
                             tab.g_img[static_cast<std::size_t>(k)][ch]
                                      [static_cast<std::size_t>(rep)]) <= kImageGroupTol;
      if (same) {
        tab.class_of[static_cast<std::size_t>(i)] = c;
        break;
      }
    }
    if (tab.class_of[static_cast<std::size_t>(i)] < 0) {
      tab.class_of[static_cast<std::size_t>(i)] = static_cast<int>(tab.class_rep.size());
      tab.class_rep.push_back(i);
    }
  }
  tab.num_classes = static_cast<int>(tab.class_rep.size());

  for (int k = 0; k < num_sensors; ++k) {
    std::vector<std::vector<std::vector<double>>> by_channel;
    for (std::size_t ch = 0; ch < tab.f_img[static_cast<std::size_t>(k)].size(); ++ch) {
      const Pmf& f = tab.f_img[static_cast<std::size_t>(k)][ch];
      std::vector<std::vector<double>> by_class;
      for (int c = 0; c < tab.num_classes; ++c) {
        const Pmf& g = tab.g_img[static_cast<std::size_t>(k)][ch]
                                [static_cast<std::size_t>(tab.class_rep[static_cast<std::size_t>(c)])];
        std::vector<double> row(static_cast<std::size_t>(f.size()));
        for (int z = 0; z < f.size(); ++z) row[static_cast<std::size_t>(z)] = clamped_llr(g[z], f[z]);
        by_class.push_back(std::move(row));
      }
      by_channel.push_back(std::move(by_class));
    }
    tab.llr.push_back(std::move(by_channel));
  }
  return tab;
}

// advance one time step; truth_class < 0 means pre-change
inline void sim_step(const SimTables& tab, const std::vector<ChannelMixture>& mixtures,
                     GlrState& st, int truth_class, Rng& rng, std::vector<double>& inc) {
  inc.assign(static_cast<std::size_t>(tab.num_classes), 0.0);
  for (std::size_t k = 0; k < mixtures.size(); ++k) {
    const int c = sample_index(rng, mixtures[k].weights);
    const Pmf& law =
        truth_class < 0
            ? tab.f_img[k][static_cast<std::size_t>(c)]
            : tab.g_img[k][static_cast<std::size_t>(c)]
                       [static_cast<std::size_t>(tab.class_rep[static_cast<std::size_t>(truth_class)])];
    const int z = sample_index(rng, law.p);
    const auto& llr = tab.llr[k][static_cast<std::size_t>(c)];
    for (int j = 0; j < tab.num_classes; ++j)
      inc[static_cast<std::size_t>(j)] += llr[static_cast<std::size_t>(j)][static_cast<std::size_t>(z)];
  }
  glr_advance(st, inc);
}

inline MonteCarloEstimate summarize(const NeumaierSum& sum, const NeumaierSum& sumsq,
                                    long long trials) {
  MonteCarloEstimate est;
  const double n = static_cast<double>(trials);
  est.estimate = sum.value() / n;
  if (trials > 1) {
    const double var =
        std::max(0.0, (sumsq.value() - n * est.estimate * est.estimate) / (n - 1.0));
    est.halfwidth = 1.96 * std::sqrt(var / n);
  }
  return est;
}

}  // namespace detail

// mean time to false alarm over pre-change-forever paths; censored paths count
// at the horizon cap, so a nonzero censored count means the estimate is a lower bound
inline MonteCarloEstimate estimate_arl(const DecentralizedModel& dm,
                                       const std::vector<ChannelMixture>& mixtures, double b,
                                       long long trials, long long horizon_cap = kDefaultHorizonCap,
                                       std::uint64_t seed = 1) {
  if (trials < 1) throw std::invalid_argument("estimate_arl: trials must be >= 1");
  if (horizon_cap < 1) throw std::invalid_argument("estimate_arl: horizon_cap must be >= 1");
  const detail::SimTables tab = detail::build_sim_tables(dm, mixtures);
  detail::NeumaierSum sum, sumsq;
  long long censored = 0;
  std::vector<double> inc;
  for (long long trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(trial)));
    GlrState st = make_glr_state(tab.num_classes, b);
    while (!st.stopped && st.t < horizon_cap)
      detail::sim_step(tab, mixtures, st, -1, rng, inc);
    if (!st.stopped) ++censored;
    const double tau = static_cast<double>(st.t);
    sum.add(tau);
    sumsq.add(tau * tau);
  }
  MonteCarloEstimate est = detail::summarize(sum, sumsq, trials);
  est.censored = censored;
  return est;
}

// worst-case detection delays: change at t=1 with the statistic at its reflecting
// barrier, one run batch per distinct post-change class
inline DetectionReport estimate_ewadd(const DecentralizedModel& dm,
                                      const std::vector<ChannelMixture>& mixtures, double b,
                                      long long trials, std::uint64_t seed = 1,
                                      long long horizon_cap = kDefaultHorizonCap) {
  if (trials < 1) throw std::invalid_argument("estimate_ewadd: trials must be >= 1");
  const detail::SimTables tab = detail::build_sim_tables(dm, mixtures);
  std::vector<MonteCarloEstimate> per_class(static_cast<std::size_t>(tab.num_classes));
  std::vector<double> inc;
  for (int c = 0; c < tab.num_classes; ++c) {
    const std::uint64_t class_seed = derive_seed(seed, static_cast<std::uint64_t>(c));
    detail::NeumaierSum sum, sumsq;
    long long censored = 0;
    for (long long trial = 0; trial < trials; ++trial) {
      Rng rng(derive_seed(class_seed, static_cast<std::uint64_t>(trial)));
      GlrState st = make_glr_state(tab.num_classes, b);
      while (!st.stopped && st.t < horizon_cap)
        detail::sim_step(tab, mixtures, st, c, rng, inc);
      if (!st.stopped) ++censored;
      const double tau = static_cast<double>(st.t);
      sum.add(tau);
      sumsq.add(tau * tau);
    }
    per_class[static_cast<std::size_t>(c)] = detail::summarize(sum, sumsq, trials);
    per_class[static_cast<std::size_t>(c)].censored = censored;
  }

  DetectionReport report;
  report.trials = trials;
  report.horizon = horizon_cap;
  report.threshold = b;
  report.seed = seed;
  report.wadd.resize(static_cast<std::size_t>(tab.num_hypotheses));
  for (int i = 0; i < tab.num_hypotheses; ++i)
    report.wadd[static_cast<std::size_t>(i)] =
        per_class[static_cast<std::size_t>(tab.class_of[static_cast<std::size_t>(i)])];
  double ewadd = 0.0;
  double var = 0.0;
  std::vector<double> class_weight(static_cast<std::size_t>(tab.num_classes), 0.0);
  for (int i = 0; i < tab.num_hypotheses; ++i) {
    ewadd += dm.prior[i] * report.wadd[static_cast<std::size_t>(i)].estimate;
    class_weight[static_cast<std::size_t>(tab.class_of[static_cast<std::size_t>(i)])] +=
        dm.prior[i];
  }
  for (int c = 0; c < tab.num_classes; ++c) {
    const double se = per_class[static_cast<std::size_t>(c)].halfwidth / 1.96;
    var += class_weight[static_cast<std::size_t>(c)] * class_weight[static_cast<std::size_t>(c)] *
           se * se;
  }
  report.ewadd = ewadd;
  report.ewadd_halfwidth = 1.96 * std::sqrt(var);
  return report;
}

// smallest threshold whose estimated ARL lands in [gamma, 1.2*gamma], found by
// bisection with common random numbers so the probe curve is monotone in b
inline double calibrate_threshold(const DecentralizedModel& dm,
                                  const std::vector<ChannelMixture>& mixtures,
                                  double gamma_target, double tol, std::uint64_t seed = 1,
                                  long long trials = 2000,
                                  long long horizon_cap = kDefaultHorizonCap) {
  if (!(gamma_target > 1.0))
    throw std::invalid_argument("calibrate_threshold: gamma_target must exceed 1");
  if (!(tol > 0.0)) throw std::invalid_argument("calibrate_threshold: tol must be > 0");
  const double band_lo = gamma_target;
  const double band_hi = 1.2 * gamma_target;
  std::vector<std::pair<double, double>> trace;
  const auto arl_at = [&](double b) {
    const double est = estimate_arl(dm, mixtures, b, trials, horizon_cap, seed).estimate;
    trace.emplace_back(b, est);
    return est;
  };
  const auto trace_text = [&]() {
    std::string s;
    for (const auto& [b, est] : trace)
      s += " (b=" + std::to_string(b) + ", arl=" + std::to_string(est) + ")";
    return s;
  };
  double lo = std::log(gamma_target) - 2.0;
  double hi = std::log(gamma_target) + 4.0;
  const double at_lo = arl_at(lo);
  if (at_lo >= band_lo && at_lo <= band_hi) return lo;
  if (at_lo > band_hi)
    throw std::runtime_error("calibrate_threshold: bracket failure, ARL at low end already above "
                             "band; trace:" + trace_text());
  const double at_hi = arl_at(hi);
  if (at_hi >= band_lo && at_hi <= band_hi) return hi;
  if (at_hi < band_lo)
    throw std::runtime_error("calibrate_threshold: bracket failure, ARL at high end below band; "
                             "trace:" + trace_text());
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double at_mid = arl_at(mid);
    if (at_mid >= band_lo && at_mid <= band_hi) return mid;
    if (at_mid < band_lo)
      lo = mid;
    else
      hi = mid;
  }
  throw std::runtime_error("calibrate_threshold: bisection interval collapsed without entering "
                           "the target band; trace:" + trace_text());
}

namespace detail {

inline DecentralizedModel as_decentralized(const SignalModel& m) {
  DecentralizedModel dm;
  dm.sensors.push_back(m);
  dm.prior = m.prior;
  return dm;
}

}  // namespace detail

inline MonteCarloEstimate estimate_arl(const SignalModel& m, const ChannelMixture& mix, double b,
                                       long long trials, long long horizon_cap = kDefaultHorizonCap,
                                       std::uint64_t seed = 1) {
  return estimate_arl(detail::as_decentralized(m), {mix}, b, trials, horizon_cap, seed);
}

inline MonteCarloEstimate estimate_arl(const SignalModel& m, const Channel& t, double b,
                                       long long trials, long long horizon_cap = kDefaultHorizonCap,
                                       std::uint64_t seed = 1) {
  return estimate_arl(m, single_channel_mixture(t), b, trials, horizon_cap, seed);
}

inline DetectionReport estimate_ewadd(const SignalModel& m, const ChannelMixture& mix, double b,
                                      long long trials, std::uint64_t seed = 1,
                                      long long horizon_cap = kDefaultHorizonCap) {
  return estimate_ewadd(detail::as_decentralized(m), {mix}, b, trials, seed, horizon_cap);
}

inline DetectionReport estimate_ewadd(const SignalModel& m, const Channel& t, double b,
                                      long long trials, std::uint64_t seed = 1,
                                      long long horizon_cap = kDefaultHorizonCap) {
  return estimate_ewadd(m, single_channel_mixture(t), b, trials, seed, horizon_cap);
}

inline double calibrate_threshold(const SignalModel& m, const ChannelMixture& mix,
                                  double gamma_target, double tol, std::uint64_t seed = 1,
                                  long long trials = 2000,
                                  long long horizon_cap = kDefaultHorizonCap) {
  return calibrate_threshold(detail::as_decentralized(m), {mix}, gamma_target, tol, seed, trials,
                             horizon_cap);
}

inline double calibrate_threshold(const SignalModel& m, const Channel& t, double gamma_target,
                                  double tol, std::uint64_t seed = 1, long long trials = 2000,
                                  long long horizon_cap = kDefaultHorizonCap) {
  return calibrate_threshold(m, single_channel_mixture(t), gamma_target, tol, seed, trials,
                             horizon_cap);
}

}  // namespace pqcd
