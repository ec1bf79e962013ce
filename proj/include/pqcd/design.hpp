#pragma once

#include <chrono>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pqcd/channel.hpp"
#include "pqcd/partition.hpp"
#include "pqcd/pmf.hpp"
#include "pqcd/polytope.hpp"
#include "pqcd/privacy.hpp"
#include "pqcd/signal_model.hpp"

namespace pqcd {

inline constexpr int kMaxExactPostLaws = 12;
inline constexpr double kValueTieTol = 1e-12;

struct SolverStats {
  long long partitions_examined = 0;
  long long bases_examined = 0;
  long long vertices_examined = 0;
  double wall_ms = 0.0;
};

struct DesignResult {
  Channel channel;
  double value = 0.0;
  Partition partition;
  double epsilon_bits = 0.0;
  int max_blocks = 0;
  bool approximate = false;  // an enumeration cap was hit somewhere along the way
  SolverStats stats;
};

struct ExactOptions {
  long long vertex_cap = kDefaultVertexCap;
  long long base_cap = kDefaultBaseCap;
  int out_size = 0;  // 0 means same as the input alphabet
};

// memo for sweeps that revisit the same partitions at growing budgets
struct ExactCache {
  std::map<std::string, DesignResult> by_partition;
};

namespace detail {

inline bool lexicographically_smaller(const std::vector<double>& a,
                                      const std::vector<double>& b) {
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    if (a[i] < b[i] - kValueTieTol) return true;
    if (a[i] > b[i] + kValueTieTol) return false;
  }
  return false;
}

}  // namespace detail

// best sanitizer over the merge polytope of one partition; ties between equal-value
// vertices go to the lexicographically smallest channel entries
inline DesignResult solve_partition_subproblem(const SignalModel& m, const Partition& part,
                                               const ExactOptions& opts = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  MergePolytope poly = build_merge_polytope(m, part, opts.out_size);
  DesignResult best;
  best.partition = part;
  bool have_best = false;
  VertexEnumStats stats = vertex_enumerate_visit(
      poly,
      [&](const Channel& t) {
        const double value = expected_kl_objective(t, m);
        if (!have_best || value > best.value + kValueTieTol ||
            (value > best.value - kValueTieTol &&
             detail::lexicographically_smaller(t.a, best.channel.a))) {
          best.channel = t;
          best.value = value;
          have_best = true;
        }
        return true;
      },
      opts.vertex_cap, opts.base_cap);
  if (!have_best)
    throw std::runtime_error(
        "solve_partition_subproblem: enumeration cap hit before any vertex was found; "
        "raise the caps or use the smoothed solver");
  best.approximate = stats.truncated;
  best.stats.partitions_examined = 1;
  best.stats.bases_examined = stats.bases_examined;
  best.stats.vertices_examined = stats.vertices_found;
  best.stats.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return best;
}

// exhaustive maximal-leakage design: every partition into at most 2^epsilon blocks,
// every vertex of each merge polytope; ties between partitions go to the first one
// in canonical enumeration order
inline DesignResult exact_design_ml(const SignalModel& m, double epsilon_bits,
                                    const ExactOptions& opts = {}, ExactCache* cache = nullptr) {
  validate_signal_model(m);
  const auto t0 = std::chrono::steady_clock::now();
  const int n = m.num_post();
  if (n > kMaxExactPostLaws)
    throw std::invalid_argument(
        "exact_design_ml: " + std::to_string(n) +
        " post-change laws exceed the exhaustive-enumeration guard of " +
        std::to_string(kMaxExactPostLaws) + "; use the smoothed solver instead");
  PrivacyBudget budget{epsilon_bits};
  const int max_blocks = std::min<long long>(budget.max_blocks(), n);

  DesignResult best;
  bool have_best = false;
  SolverStats total;
  bool any_truncated = false;
  PartitionStream stream(n, max_blocks);
  Partition part;
  while (stream.next(part)) {
    DesignResult sub;
    const std::string key = partition_key(part);
    if (cache != nullptr) {
      auto it = cache->by_partition.find(key);
      if (it != cache->by_partition.end()) {
        sub = it->second;
      } else {
        sub = solve_partition_subproblem(m, part, opts);
        cache->by_partition.emplace(key, sub);
      }
    } else {
      sub = solve_partition_subproblem(m, part, opts);
    }
    ++total.partitions_examined;
    total.bases_examined += sub.stats.bases_examined;
    total.vertices_examined += sub.stats.vertices_examined;
    any_truncated = any_truncated || sub.approximate;
    if (!have_best || sub.value > best.value) {
      best = sub;
      have_best = true;
    }
  }
  if (!have_best) throw std::runtime_error("exact_design_ml: no partition was enumerated");
  best.epsilon_bits = epsilon_bits;
  best.max_blocks = max_blocks;
  best.approximate = any_truncated;
  best.stats = total;
  best.stats.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return best;
}

struct DecentralizedDesignResult {
  std::vector<Channel> channels;
  std::vector<double> per_sensor_value;
  double value = 0.0;
  Partition partition;
  double epsilon_bits = 0.0;
  int max_blocks = 0;
  bool approximate = false;
  SolverStats stats;
};

// decentralized maximal-leakage design under a common merge pattern: all sensors
// share the partition, each optimizes its own channel, the objective adds up
inline DecentralizedDesignResult local_exact_decentralized(const DecentralizedModel& dm,
                                                           double epsilon_bits,
                                                           const ExactOptions& opts = {},
                                                           ExactCache* cache = nullptr) {
  validate_decentralized_model(dm);
  const auto t0 = std::chrono::steady_clock::now();
  const int n = static_cast<int>(dm.prior.size());
  if (n > kMaxExactPostLaws)
    throw std::invalid_argument(
        "local_exact_decentralized: " + std::to_string(n) +
        " post-change laws exceed the exhaustive-enumeration guard of " +
        std::to_string(kMaxExactPostLaws) + "; use the smoothed solver instead");
  PrivacyBudget budget{epsilon_bits};
  const int max_blocks = std::min<long long>(budget.max_blocks(), n);
  const int num_sensors = static_cast<int>(dm.sensors.size());

  DecentralizedDesignResult best;
  bool have_best = false;
  SolverStats total;
  bool any_truncated = false;
  PartitionStream stream(n, max_blocks);
  Partition part;
  while (stream.next(part)) {
    DecentralizedDesignResult cand;
    cand.partition = part;
    const std::string key = partition_key(part);
    for (int k = 0; k < num_sensors; ++k) {
      DesignResult sub;
      const std::string sensor_key = std::to_string(k) + ":" + key;
      if (cache != nullptr) {
        auto it = cache->by_partition.find(sensor_key);
        if (it != cache->by_partition.end()) {
          sub = it->second;
        } else {
          sub = solve_partition_subproblem(dm.sensors[static_cast<std::size_t>(k)], part, opts);
          cache->by_partition.emplace(sensor_key, sub);
        }
      } else {
        sub = solve_partition_subproblem(dm.sensors[static_cast<std::size_t>(k)], part, opts);
      }
      cand.channels.push_back(sub.channel);
      cand.per_sensor_value.push_back(sub.value);
      cand.value += sub.value;
      total.bases_examined += sub.stats.bases_examined;
      total.vertices_examined += sub.stats.vertices_examined;
      any_truncated = any_truncated || sub.approximate;
    }
    ++total.partitions_examined;
    if (!have_best || cand.value > best.value) {
      best = cand;
      have_best = true;
    }
  }
  if (!have_best)
    throw std::runtime_error("local_exact_decentralized: no partition was enumerated");
  best.epsilon_bits = epsilon_bits;
  best.max_blocks = max_blocks;
  best.approximate = any_truncated;
  best.stats = total;
  best.stats.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return best;
}

}  // namespace pqcd
