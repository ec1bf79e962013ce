#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pqcd/channel.hpp"
#include "pqcd/pmf.hpp"
#include "pqcd/rng.hpp"

namespace pqcd {

inline constexpr double kMinInstanceSeparation = 1e-6;

// i.i.d. change-point model: observations follow pre before time change_point
// (1-based) and post[i] from change_point on; nullopt means the change never
// happens
struct SignalModel {
  Pmf pre;                // f
  std::vector<Pmf> post;  // G = {g_1 .. g_|G|}
  Pmf prior;              // p_I over indices of post
  std::optional<long long> change_point;

  int alphabet_size() const { return pre.size(); }
  int num_post() const { return static_cast<int>(post.size()); }
};

inline void validate_signal_model(const SignalModel& m, const std::string& what = "model") {
  validate_pmf(m.pre, what + ".f");
  if (m.post.empty()) throw std::invalid_argument(what + ": G is empty");
  for (std::size_t i = 0; i < m.post.size(); ++i) {
    validate_pmf(m.post[i], what + ".G[" + std::to_string(i) + "]");
    if (m.post[i].size() != m.pre.size())
      throw std::invalid_argument(what + ": alphabet size mismatch in G[" + std::to_string(i) + "]");
    if (l1_distance(m.pre, m.post[i]) <= 1e-9)
      throw std::invalid_argument(what + ": G[" + std::to_string(i) + "] coincides with f");
  }
  validate_pmf(m.prior, what + ".prior");
  if (m.prior.size() != static_cast<int>(m.post.size()))
    throw std::invalid_argument(what + ": prior length does not match |G|");
  if (m.change_point && *m.change_point < 0)
    throw std::invalid_argument(what + ": change_point must be nonnegative");
}

// independent sensors observing a common change index I with a shared prior
struct DecentralizedModel {
  std::vector<SignalModel> sensors;
  Pmf prior;

  int num_sensors() const { return static_cast<int>(sensors.size()); }
  int num_post() const { return sensors.empty() ? 0 : sensors[0].num_post(); }
};

inline void validate_decentralized_model(const DecentralizedModel& d,
                                         const std::string& what = "dmodel") {
  if (d.sensors.empty()) throw std::invalid_argument(what + ": no sensors");
  validate_pmf(d.prior, what + ".prior");
  for (std::size_t k = 0; k < d.sensors.size(); ++k) {
    const std::string sk = what + ".sensors[" + std::to_string(k) + "]";
    validate_signal_model(d.sensors[k], sk);
    if (d.sensors[k].num_post() != d.sensors[0].num_post())
      throw std::invalid_argument(sk + ": |G| differs across sensors");
    if (d.sensors[k].prior.p != d.prior.p)
      throw std::invalid_argument(sk + ": prior differs from the shared prior");
  }
  if (d.prior.size() != d.sensors[0].num_post())
    throw std::invalid_argument(what + ": prior length does not match |G|");
}

inline std::vector<Pmf> sanitized_images(const Channel& t, const SignalModel& m) {
  std::vector<Pmf> out;
  out.reserve(m.post.size());
  for (const Pmf& g : m.post) out.push_back(apply_channel(t, g));
  return out;
}

// Jensen-relaxed design objective: E_I[ KL(T g_I || T f) ] in nats
inline double expected_kl_objective(const Channel& t, const SignalModel& m) {
  if (t.in_size != m.alphabet_size())
    throw std::invalid_argument("expected_kl_objective: channel/model size mismatch");
  const Pmf pre_image = apply_channel(t, m.pre);
  double s = 0.0;
  for (int i = 0; i < m.num_post(); ++i)
    s += m.prior[i] * kl_divergence(apply_channel(t, m.post[i]), pre_image);
  return s;
}

// objective of the raw (identity-sanitized) model
inline double unsanitized_objective(const SignalModel& m) {
  double s = 0.0;
  for (int i = 0; i < m.num_post(); ++i) s += m.prior[i] * kl_divergence(m.post[i], m.pre);
  return s;
}

inline Pmf random_distinct_pmf(Rng& rng, int alphabet_size, const std::vector<const Pmf*>& taken) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Pmf cand{sample_simplex(rng, alphabet_size)};
    bool ok = true;
    for (const Pmf* q : taken)
      if (l1_distance(cand, *q) < kMinInstanceSeparation) {
        ok = false;
        break;
      }
    if (ok) return cand;
  }
  throw std::runtime_error("random_distinct_pmf: rejection sampling did not terminate");
}

inline SignalModel random_instance(int alphabet_size, int num_post, std::uint64_t seed) {
  if (alphabet_size < 2) throw std::invalid_argument("random_instance: alphabet_size must be >= 2");
  if (num_post < 1) throw std::invalid_argument("random_instance: num_post must be >= 1");
  Rng rng(derive_seed(seed, 0));
  SignalModel m;
  std::vector<const Pmf*> taken;
  m.pre = random_distinct_pmf(rng, alphabet_size, taken);
  taken.push_back(&m.pre);
  for (int i = 0; i < num_post; ++i) {
    m.post.push_back(random_distinct_pmf(rng, alphabet_size, taken));
    taken.push_back(&m.post.back());
  }
  m.prior = uniform_pmf(num_post);
  m.change_point = std::nullopt;
  validate_signal_model(m);
  return m;
}

inline DecentralizedModel random_decentralized_instance(int alphabet_size, int num_post,
                                                        int num_sensors, bool identical,
                                                        std::uint64_t seed) {
  if (num_sensors < 1)
    throw std::invalid_argument("random_decentralized_instance: need at least one sensor");
  DecentralizedModel d;
  d.prior = uniform_pmf(num_post);
  for (int k = 0; k < num_sensors; ++k) {
    SignalModel m = random_instance(alphabet_size, num_post, identical ? seed : derive_seed(seed, static_cast<std::uint64_t>(k)));
    d.sensors.push_back(std::move(m));
  }
  validate_decentralized_model(d);
  return d;
}

// one released observation: the sampled channel index (0 for a plain channel)
// and the sanitized symbol
struct Observation {
  int channel = 0;
  int symbol = 0;
};

inline std::vector<Observation> sample_path(const SignalModel& m, const ChannelMixture& mix,
                                            int i, long long horizon, std::uint64_t seed) {
  if (horizon < 1) throw std::invalid_argument("sample_path: horizon must be >= 1");
  if (i < 0 || i >= m.num_post()) throw std::invalid_argument("sample_path: bad post index");
  validate_channel_mixture(mix);
  if (mix.channels[0].in_size != m.alphabet_size())
    throw std::invalid_argument("sample_path: channel/model size mismatch");

  std::vector<Pmf> pre_images, post_images;
  for (const Channel& c : mix.channels) {
    pre_images.push_back(apply_channel(c, m.pre));
    post_images.push_back(apply_channel(c, m.post[static_cast<std::size_t>(i)]));
  }
  Rng rng(derive_seed(seed, 0));
  std::vector<Observation> path;
  path.reserve(static_cast<std::size_t>(horizon));
  for (long long t = 1; t <= horizon; ++t) {
    const bool post = m.change_point.has_value() && t >= *m.change_point;
    const int a = sample_index(rng, mix.weights);
    const Pmf& law = post ? post_images[static_cast<std::size_t>(a)]
                          : pre_images[static_cast<std::size_t>(a)];
    path.push_back(Observation{a, sample_index(rng, law.p)});
  }
  return path;
}

inline std::vector<Observation> sample_path(const SignalModel& m, const Channel& t, int i,
                                            long long horizon, std::uint64_t seed) {
  return sample_path(m, single_channel_mixture(t), i, horizon, seed);
}

}  // namespace pqcd
