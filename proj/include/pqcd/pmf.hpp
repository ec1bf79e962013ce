#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace pqcd {

inline constexpr double kPmfSumTol = 1e-12;

// finite probability mass function over {0, ..., size()-1}
struct Pmf {
  std::vector<double> p;

  int size() const { return static_cast<int>(p.size()); }
  double operator[](int i) const { return p[static_cast<std::size_t>(i)]; }
  double& operator[](int i) { return p[static_cast<std::size_t>(i)]; }
};

inline void validate_pmf(const Pmf& q, const std::string& what = "pmf") {
  if (q.p.empty()) throw std::invalid_argument(what + ": empty support");
  double sum = 0.0;
  for (double x : q.p) {
    if (!(x >= 0.0)) throw std::invalid_argument(what + ": negative or NaN entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > kPmfSumTol)
    throw std::invalid_argument(what + ": entries sum to " + std::to_string(sum) +
                                ", expected 1 within 1e-12");
}

inline Pmf make_pmf(std::vector<double> v, const std::string& what = "pmf") {
  Pmf q{std::move(v)};
  validate_pmf(q, what);
  return q;
}

inline Pmf uniform_pmf(int n) {
  if (n <= 0) throw std::invalid_argument("uniform_pmf: size must be positive");
  Pmf q;
  q.p.assign(static_cast<std::size_t>(n), 1.0 / n);
  return q;
}

inline double l1_distance(const Pmf& a, const Pmf& b) {
  if (a.size() != b.size()) throw std::invalid_argument("l1_distance: size mismatch");
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

inline double linf_distance(const Pmf& a, const Pmf& b) {
  if (a.size() != b.size()) throw std::invalid_argument("linf_distance: size mismatch");
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
  return s;
}

// KL divergence in nats with the conventions 0*log(0/q) = 0 and
// p > 0, q = 0 => +infinity (the infinity marker used throughout).
inline double kl_divergence(const Pmf& a, const Pmf& b) {
  if (a.size() != b.size()) throw std::invalid_argument("kl_divergence: size mismatch");
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    const double pa = a[i];
    if (pa == 0.0) continue;
    const double pb = b[i];
    if (pb == 0.0) return std::numeric_limits<double>::infinity();
    s += pa * std::log(pa / pb);
  }
  return s < 0.0 ? 0.0 : s;  // roundoff can land a hair below the true value 0
}

}  // namespace pqcd
