#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pqcd/pmf.hpp"

namespace pqcd {

inline constexpr double kImageGroupTol = 1e-9;

// set partition of {0..n-1} as a restricted growth string: block labels are
// assigned in first-occurrence order, so block_of[0] == 0
struct Partition {
  std::vector<int> block_of;
  int num_blocks = 0;

  int size() const { return static_cast<int>(block_of.size()); }
};

inline void validate_partition(const Partition& p, const std::string& what = "partition") {
  if (p.block_of.empty()) throw std::invalid_argument(what + ": empty");
  int max_seen = -1;
  for (int b : p.block_of) {
    if (b < 0 || b > max_seen + 1)
      throw std::invalid_argument(what + ": labels are not a restricted growth string");
    if (b == max_seen + 1) ++max_seen;
  }
  if (p.num_blocks != max_seen + 1)
    throw std::invalid_argument(what + ": num_blocks does not match labels");
}

inline Partition singleton_partition(int n) {
  Partition p;
  p.block_of.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) p.block_of[static_cast<std::size_t>(i)] = i;
  p.num_blocks = n;
  return p;
}

inline std::string partition_key(const Partition& p) {
  std::string s;
  for (int b : p.block_of) {
    s += std::to_string(b);
    s += '.';
  }
  return s;
}

// exact Stirling number of the second kind, S(n,k) = k S(n-1,k) + S(n-1,k-1)
inline std::uint64_t stirling2(int n, int k) {
  if (n < 0 || k < 0 || k > n) throw std::invalid_argument("stirling2: need 0 <= k <= n");
  if (n > 20) throw std::invalid_argument("stirling2: n > 20 exceeds the overflow guard");
  std::vector<std::vector<std::uint64_t>> s(
      static_cast<std::size_t>(n) + 1,
      std::vector<std::uint64_t>(static_cast<std::size_t>(k) + 1, 0));
  s[0][0] = 1;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= std::min(i, k); ++j)
      s[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          static_cast<std::uint64_t>(j) * s[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j)] +
          s[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j) - 1];
  return s[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
}

inline std::uint64_t count_partitions_up_to(int n, int m) {
  std::uint64_t total = 0;
  for (int b = 1; b <= m; ++b) total += stirling2(n, b);
  return total;
}

// yields every partition of {0..n-1} with at most m blocks exactly once, in
// lexicographic restricted-growth-string order; single consumer
class PartitionStream {
 public:
  PartitionStream(int n, int m) : n_(n), m_(m) {
    if (n < 1 || m < 1 || m > n)
      throw std::invalid_argument("enumerate_partitions: need 1 <= m <= n");
    if (n > 12)
      throw std::invalid_argument(
          "enumerate_partitions: n = " + std::to_string(n) +
          " exceeds the guard (12); about " + std::to_string(count_partitions_up_to(n, m)) +
          " partitions would be enumerated");
    a_.assign(static_cast<std::size_t>(n), 0);
  }

  bool next(Partition& out) {
    if (done_) return false;
    if (first_) {
      first_ = false;
    } else if (!advance()) {
      done_ = true;
      return false;
    }
    out.block_of = a_;
    int max_label = 0;
    for (int v : a_) max_label = std::max(max_label, v);
    out.num_blocks = max_label + 1;
    return true;
  }

 private:
  bool advance() {
    for (int i = n_ - 1; i >= 1; --i) {
      int prefix_max = 0;
      for (int j = 0; j < i; ++j) prefix_max = std::max(prefix_max, a_[static_cast<std::size_t>(j)]);
      if (a_[static_cast<std::size_t>(i)] <= prefix_max &&
          a_[static_cast<std::size_t>(i)] < m_ - 1) {
        ++a_[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < n_; ++j) a_[static_cast<std::size_t>(j)] = 0;
        return true;
      }
    }
    return false;
  }

  int n_, m_;
  std::vector<int> a_;
  bool first_ = true;
  bool done_ = false;
};

inline std::vector<Partition> enumerate_partitions(int n, int m) {
  PartitionStream stream(n, m);
  std::vector<Partition> out;
  Partition p;
  while (stream.next(p)) out.push_back(p);
  return out;
}

// partition induced by grouping images that coincide within L1 tolerance;
// first-occurrence labeling keeps the result canonical
inline Partition induced_partition(const std::vector<Pmf>& images, double tol = kImageGroupTol) {
  if (images.empty()) throw std::invalid_argument("induced_partition: no images");
  Partition p;
  p.block_of.assign(images.size(), -1);
  std::vector<int> representative;
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (std::size_t r = 0; r < representative.size(); ++r) {
      if (l1_distance(images[i], images[static_cast<std::size_t>(representative[r])]) <= tol) {
        p.block_of[i] = static_cast<int>(r);
        break;
      }
    }
    if (p.block_of[i] < 0) {
      p.block_of[i] = static_cast<int>(representative.size());
      representative.push_back(static_cast<int>(i));
    }
  }
  p.num_blocks = static_cast<int>(representative.size());
  return p;
}

}  // namespace pqcd
