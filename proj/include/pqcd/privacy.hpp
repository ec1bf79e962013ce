#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "pqcd/channel.hpp"
#include "pqcd/partition.hpp"
#include "pqcd/pmf.hpp"
#include "pqcd/signal_model.hpp"

namespace pqcd {

// maximal-leakage budget in bits; the derived block budget is floor(2^eps),
// nudged so eps = log2(n) yields exactly n despite floating-point rounding
struct PrivacyBudget {
  double epsilon_bits = 0.0;

  int max_blocks() const {
    if (epsilon_bits < 0.0) throw std::invalid_argument("PrivacyBudget: epsilon must be >= 0");
    const double m = std::floor(std::exp2(epsilon_bits) + 1e-9);
    if (m > 1e9) throw std::invalid_argument("PrivacyBudget: epsilon implausibly large");
    return static_cast<int>(m);
  }
};

// L_max(I -> J) for a deterministic summary J: log2 of the block count
inline double max_leakage_via_partition(const Partition& part) {
  validate_partition(part);
  return std::log2(static_cast<double>(part.num_blocks));
}

// exact maximal leakage of a length-w window of sanitized post-change
// observations: log2 of Sum over sequences of max_i Prod_t (T g_i)(y_t)
inline double max_leakage_window_bruteforce(const SignalModel& m, const Channel& t,
                                            int window_len) {
  if (window_len < 1)
    throw std::invalid_argument("max_leakage_window_bruteforce: window_len must be >= 1");
  if (t.in_size != m.alphabet_size())
    throw std::invalid_argument("max_leakage_window_bruteforce: channel/model size mismatch");
  const double seq_count = std::pow(static_cast<double>(t.out_size), window_len);
  if (seq_count > 1e6)
    throw std::invalid_argument("max_leakage_window_bruteforce: " + std::to_string(seq_count) +
                                " sequences exceeds the 1e6 guard");
  const std::vector<Pmf> images = sanitized_images(t, m);
  const int n_img = static_cast<int>(images.size());

  std::vector<int> seq(static_cast<std::size_t>(window_len), 0);
  std::vector<double> prod(static_cast<std::size_t>(n_img));
  double total = 0.0;
  bool more = true;
  while (more) {
    for (int i = 0; i < n_img; ++i) {
      double p = 1.0;
      for (int tpos = 0; tpos < window_len; ++tpos)
        p *= images[static_cast<std::size_t>(i)][seq[static_cast<std::size_t>(tpos)]];
      prod[static_cast<std::size_t>(i)] = p;
    }
    double best = 0.0;
    for (double p : prod) best = std::max(best, p);
    total += best;
    more = false;
    for (int tpos = window_len - 1; tpos >= 0; --tpos) {
      if (++seq[static_cast<std::size_t>(tpos)] < t.out_size) {
        more = true;
        break;
      }
      seq[static_cast<std::size_t>(tpos)] = 0;
    }
  }
  return std::log2(total);
}

// K1: worst-case privacy of the protected set, max_{i in I1} min_{j in I1, j != i}
inline double k1_metric(const std::vector<Pmf>& images, const std::vector<int>& i1) {
  if (i1.size() <= 1) throw std::invalid_argument("k1_metric: |I1| must exceed 1");
  double outer = 0.0;
  for (int i : i1) {
    double inner = std::numeric_limits<double>::infinity();
    for (int j : i1) {
      if (j == i) continue;
      inner = std::min(inner, kl_divergence(images[static_cast<std::size_t>(i)],
                                            images[static_cast<std::size_t>(j)]));
    }
    outer = std::max(outer, inner);
  }
  return outer;
}

// K2: distinguishability of the public set, min_{i in I2} min_{j in I1 u I2, j != i}
inline double k2_metric(const std::vector<Pmf>& images, const std::vector<int>& i1,
                        const std::vector<int>& i2) {
  if (i2.empty()) throw std::invalid_argument("k2_metric: I2 must be nonempty");
  std::vector<int> all;
  all.insert(all.end(), i1.begin(), i1.end());
  all.insert(all.end(), i2.begin(), i2.end());
  if (all.size() <= 1) throw std::invalid_argument("k2_metric: need at least two indices");
  double outer = std::numeric_limits<double>::infinity();
  for (int i : i2) {
    for (int j : all) {
      if (j == i) continue;
      outer = std::min(outer, kl_divergence(images[static_cast<std::size_t>(i)],
                                            images[static_cast<std::size_t>(j)]));
    }
  }
  return outer;
}

namespace detail {

// phi-weighted pairwise divergence table D(i,j) = sum_c phi(c) KL(T_c g_i || T_c g_j),
// summed over sensors in the decentralized case
inline std::vector<std::vector<double>> mixture_divergence_table(
    const std::vector<ChannelMixture>& per_sensor, const std::vector<const SignalModel*>& models) {
  if (per_sensor.size() != models.size())
    throw std::invalid_argument("mixture_divergence_table: sensor count mismatch");
  const int n = models[0]->num_post();
  std::vector<std::vector<double>> d(static_cast<std::size_t>(n),
                                     std::vector<double>(static_cast<std::size_t>(n), 0.0));
  for (std::size_t k = 0; k < per_sensor.size(); ++k) {
    const ChannelMixture& mix = per_sensor[k];
    validate_channel_mixture(mix);
    if (models[k]->num_post() != n)
      throw std::invalid_argument("mixture_divergence_table: |G| mismatch across sensors");
    for (int c = 0; c < mix.num_channels(); ++c) {
      if (mix.weights[static_cast<std::size_t>(c)] == 0.0) continue;
      const std::vector<Pmf> images = sanitized_images(mix.channels[static_cast<std::size_t>(c)],
                                                       *models[k]);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          if (i == j) continue;
          d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] +=
              mix.weights[static_cast<std::size_t>(c)] *
              kl_divergence(images[static_cast<std::size_t>(i)],
                            images[static_cast<std::size_t>(j)]);
        }
    }
  }
  return d;
}

inline std::pair<double, double> k_metrics_from_table(const std::vector<std::vector<double>>& d,
                                                      const std::vector<int>& i1,
                                                      const std::vector<int>& i2) {
  if (i1.size() <= 1) throw std::invalid_argument("mixture_k_metrics: |I1| must exceed 1");
  if (i2.empty()) throw std::invalid_argument("mixture_k_metrics: I2 must be nonempty");
  double k1 = 0.0;
  for (int i : i1) {
    double inner = std::numeric_limits<double>::infinity();
    for (int j : i1)
      if (j != i)
        inner = std::min(inner, d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    k1 = std::max(k1, inner);
  }
  std::vector<int> all;
  all.insert(all.end(), i1.begin(), i1.end());
  all.insert(all.end(), i2.begin(), i2.end());
  double k2 = std::numeric_limits<double>::infinity();
  for (int i : i2)
    for (int j : all)
      if (j != i)
        k2 = std::min(k2, d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
  return {k1, k2};
}

}  // namespace detail

inline std::pair<double, double> mixture_k_metrics(const ChannelMixture& mix,
                                                   const SignalModel& model,
                                                   const std::vector<int>& i1,
                                                   const std::vector<int>& i2) {
  const auto d = detail::mixture_divergence_table({mix}, {&model});
  return detail::k_metrics_from_table(d, i1, i2);
}

inline std::pair<double, double> mixture_k_metrics(const std::vector<ChannelMixture>& per_sensor,
                                                   const DecentralizedModel& dmodel,
                                                   const std::vector<int>& i1,
                                                   const std::vector<int>& i2) {
  std::vector<const SignalModel*> models;
  for (const SignalModel& s : dmodel.sensors) models.push_back(&s);
  const auto d = detail::mixture_divergence_table(per_sensor, models);
  return detail::k_metrics_from_table(d, i1, i2);
}

}  // namespace pqcd
