#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "pqcd/pmf.hpp"
#include "pqcd/rng.hpp"

namespace pqcd {

inline constexpr double kColumnSumTol = 1e-12;

// column-stochastic sanitization map: entry(y, x) = P(output = y | input = x)
struct Channel {
  std::vector<double> a;  // row-major, out_size rows by in_size columns
  int out_size = 0;
  int in_size = 0;

  double entry(int y, int x) const { return a[static_cast<std::size_t>(y) * in_size + x]; }
  double& entry(int y, int x) { return a[static_cast<std::size_t>(y) * in_size + x]; }
};

inline void validate_channel(const Channel& t, const std::string& what = "channel") {
  if (t.out_size <= 0 || t.in_size <= 0)
    throw std::invalid_argument(what + ": sizes must be positive");
  if (t.out_size > t.in_size)
    throw std::invalid_argument(what + ": output alphabet larger than input alphabet");
  if (t.a.size() != static_cast<std::size_t>(t.out_size) * t.in_size)
    throw std::invalid_argument(what + ": entry count does not match sizes");
  for (double x : t.a)
    if (!(x >= 0.0)) throw std::invalid_argument(what + ": negative or NaN entry");
  for (int x = 0; x < t.in_size; ++x) {
    double sum = 0.0;
    for (int y = 0; y < t.out_size; ++y) sum += t.entry(y, x);
    if (std::abs(sum - 1.0) > kColumnSumTol)
      throw std::invalid_argument(what + ": column " + std::to_string(x) + " sums to " +
                                  std::to_string(sum) + ", expected 1 within 1e-12");
  }
}

inline Channel make_channel(int out_size, int in_size, std::vector<double> entries,
                            const std::string& what = "channel") {
  Channel t{std::move(entries), out_size, in_size};
  validate_channel(t, what);
  return t;
}

inline Channel identity_channel(int n) {
  Channel t;
  t.out_size = t.in_size = n;
  t.a.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) t.entry(i, i) = 1.0;
  return t;
}

// deterministic channel given by a map x -> y
inline Channel deterministic_channel(int out_size, const std::vector<int>& map) {
  Channel t;
  t.out_size = out_size;
  t.in_size = static_cast<int>(map.size());
  t.a.assign(static_cast<std::size_t>(out_size) * t.in_size, 0.0);
  for (int x = 0; x < t.in_size; ++x) {
    if (map[x] < 0 || map[x] >= out_size)
      throw std::invalid_argument("deterministic_channel: map value out of range");
    t.entry(map[x], x) = 1.0;
  }
  return t;
}

// all |Y|^|X| deterministic maps in odometer order (x = 0 is the most
// significant digit, so index 0 maps everything to output 0)
inline std::vector<Channel> deterministic_channel_set(int in_size, int out_size) {
  if (out_size <= 0 || in_size <= 0)
    throw std::invalid_argument("deterministic_channel_set: sizes must be positive");
  if (out_size > in_size)
    throw std::invalid_argument("deterministic_channel_set: output alphabet larger than input");
  double count = std::pow(static_cast<double>(out_size), in_size);
  if (count > 1e4)
    throw std::invalid_argument("deterministic_channel_set: " + std::to_string(count) +
                                " maps exceeds the 1e4 guard");
  const long long n = static_cast<long long>(count + 0.5);
  std::vector<Channel> out;
  out.reserve(static_cast<std::size_t>(n));
  std::vector<int> map(static_cast<std::size_t>(in_size), 0);
  for (long long idx = 0; idx < n; ++idx) {
    long long rem = idx;
    for (int x = in_size - 1; x >= 0; --x) {
      map[static_cast<std::size_t>(x)] = static_cast<int>(rem % out_size);
      rem /= out_size;
    }
    out.push_back(deterministic_channel(out_size, map));
  }
  return out;
}

inline Channel random_channel(int out_size, int in_size, Rng& rng) {
  Channel t;
  t.out_size = out_size;
  t.in_size = in_size;
  t.a.assign(static_cast<std::size_t>(out_size) * in_size, 0.0);
  for (int x = 0; x < in_size; ++x) {
    std::vector<double> col = sample_simplex(rng, out_size);
    for (int y = 0; y < out_size; ++y) t.entry(y, x) = col[static_cast<std::size_t>(y)];
  }
  return t;
}

inline Pmf apply_channel(const Channel& t, const Pmf& p) {
  if (p.size() != t.in_size) throw std::invalid_argument("apply_channel: size mismatch");
  Pmf out;
  out.p.assign(static_cast<std::size_t>(t.out_size), 0.0);
  for (int y = 0; y < t.out_size; ++y) {
    double s = 0.0;
    for (int x = 0; x < t.in_size; ++x) s += t.entry(y, x) * p[x];
    out[y] = s;
  }
  return out;
}

// finite mixture of channels with a pmf over channel choices; the realized
// choice index is part of the released observation
struct ChannelMixture {
  std::vector<Channel> channels;
  std::vector<double> weights;

  int num_channels() const { return static_cast<int>(channels.size()); }
};

inline void validate_channel_mixture(const ChannelMixture& mix,
                                     const std::string& what = "mixture") {
  if (mix.channels.empty()) throw std::invalid_argument(what + ": no channels");
  if (mix.weights.size() != mix.channels.size())
    throw std::invalid_argument(what + ": weight count does not match channel count");
  const int out = mix.channels[0].out_size, in = mix.channels[0].in_size;
  double sum = 0.0;
  for (double w : mix.weights) {
    if (!(w >= 0.0)) throw std::invalid_argument(what + ": negative or NaN weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument(what + ": weights sum to " + std::to_string(sum));
  for (const Channel& c : mix.channels) {
    validate_channel(c, what);
    if (c.out_size != out || c.in_size != in)
      throw std::invalid_argument(what + ": channels disagree on alphabet sizes");
  }
}

inline ChannelMixture single_channel_mixture(Channel t) {
  ChannelMixture mix;
  mix.channels.push_back(std::move(t));
  mix.weights.push_back(1.0);
  return mix;
}

}  // namespace pqcd
