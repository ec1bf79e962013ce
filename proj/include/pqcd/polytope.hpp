#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "pqcd/channel.hpp"
#include "pqcd/partition.hpp"
#include "pqcd/signal_model.hpp"

namespace pqcd {

inline constexpr double kPivotTol = 1e-10;
inline constexpr double kVertexFeasTol = 1e-9;
inline constexpr long long kDefaultVertexCap = 1000000;
inline constexpr long long kDefaultBaseCap = 1000000;

// feasible set of one partition subproblem: column-stochastic T with
// T g_i = T g_i' for every pair in the same block; variables are vec(T)
// with index x * out_size + y
struct MergePolytope {
  int in_size = 0;
  int out_size = 0;
  std::vector<std::pair<int, int>> pair_constraints;
  std::vector<std::vector<double>> eq_rows;  // raw equality system, includes column sums
  std::vector<double> eq_rhs;
  bool pairs_vacuous = true;  // no pair adds a constraint: vertices are the deterministic maps
};

inline MergePolytope build_merge_polytope(const SignalModel& m, const Partition& part,
                                          int out_size = 0) {
  validate_partition(part);
  if (part.size() != m.num_post())
    throw std::invalid_argument("build_merge_polytope: partition size does not match |G|");
  MergePolytope poly;
  poly.in_size = m.alphabet_size();
  poly.out_size = out_size > 0 ? out_size : m.alphabet_size();
  if (poly.out_size > poly.in_size)
    throw std::invalid_argument("build_merge_polytope: output alphabet larger than input");
  const int n_vars = poly.in_size * poly.out_size;
  if (n_vars > 64)
    throw std::invalid_argument("build_merge_polytope: dimension " + std::to_string(n_vars) +
                                " exceeds the 64-variable guard");

  for (int x = 0; x < poly.in_size; ++x) {
    std::vector<double> row(static_cast<std::size_t>(n_vars), 0.0);
    for (int y = 0; y < poly.out_size; ++y)
      row[static_cast<std::size_t>(x * poly.out_size + y)] = 1.0;
    poly.eq_rows.push_back(std::move(row));
    poly.eq_rhs.push_back(1.0);
  }

  // one chain of consecutive pairs per block spans the same equalities as all pairs
  std::vector<int> last_in_block(static_cast<std::size_t>(part.num_blocks), -1);
  for (int i = 0; i < part.size(); ++i) {
    const int b = part.block_of[static_cast<std::size_t>(i)];
    if (last_in_block[static_cast<std::size_t>(b)] >= 0)
      poly.pair_constraints.emplace_back(last_in_block[static_cast<std::size_t>(b)], i);
    last_in_block[static_cast<std::size_t>(b)] = i;
  }

  for (const auto& [i, j] : poly.pair_constraints) {
    std::vector<double> diff(static_cast<std::size_t>(poly.in_size));
    double linf = 0.0;
    for (int x = 0; x < poly.in_size; ++x) {
      diff[static_cast<std::size_t>(x)] =
          m.post[static_cast<std::size_t>(i)][x] - m.post[static_cast<std::size_t>(j)][x];
      linf = std::max(linf, std::abs(diff[static_cast<std::size_t>(x)]));
    }
    if (linf < 1e-14) continue;  // identical laws add no constraint
    poly.pairs_vacuous = false;
    for (int y = 0; y < poly.out_size; ++y) {
      std::vector<double> row(static_cast<std::size_t>(n_vars), 0.0);
      for (int x = 0; x < poly.in_size; ++x)
        row[static_cast<std::size_t>(x * poly.out_size + y)] = diff[static_cast<std::size_t>(x)];
      poly.eq_rows.push_back(std::move(row));
      poly.eq_rhs.push_back(0.0);
    }
  }
  return poly;
}

struct VertexEnumStats {
  long long bases_examined = 0;
  long long vertices_found = 0;
  bool truncated = false;
};

namespace detail {

// row-reduce [A | b]; returns the independent rows; throws on inconsistency
inline void reduce_equalities(std::vector<std::vector<double>>& rows, std::vector<double>& rhs) {
  const std::size_t m = rows.size();
  const std::size_t n = m == 0 ? 0 : rows[0].size();
  std::size_t pivot_row = 0;
  for (std::size_t col = 0; col < n && pivot_row < m; ++col) {
    std::size_t best = pivot_row;
    for (std::size_t r = pivot_row + 1; r < m; ++r)
      if (std::abs(rows[r][col]) > std::abs(rows[best][col])) best = r;
    if (std::abs(rows[best][col]) <= kPivotTol) continue;
    std::swap(rows[best], rows[pivot_row]);
    std::swap(rhs[best], rhs[pivot_row]);
    const double piv = rows[pivot_row][col];
    for (std::size_t r = 0; r < m; ++r) {
      if (r == pivot_row) continue;
      const double factor = rows[r][col] / piv;
      if (factor == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) rows[r][c] -= factor * rows[pivot_row][c];
      rows[r][col] = 0.0;
      rhs[r] -= factor * rhs[pivot_row];
    }
    ++pivot_row;
  }
  for (std::size_t r = pivot_row; r < m; ++r)
    if (std::abs(rhs[r]) > 1e-9)
      throw std::runtime_error("vertex_enumerate: inconsistent equality system");
  rows.resize(pivot_row);
  rhs.resize(pivot_row);
}

inline std::string quantized_key(const std::vector<double>& entries) {
  std::string key;
  key.resize(entries.size() * sizeof(std::int64_t));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const std::int64_t q = static_cast<std::int64_t>(std::llround(entries[i] * 1e9));
    std::memcpy(&key[i * sizeof(std::int64_t)], &q, sizeof(std::int64_t));
  }
  return key;
}

}  // namespace detail

// Enumerates the polytope vertices as basic feasible solutions: every choice of
// rank-many basic variables with the rest pinned at zero, keeping nonnegative
// solutions, deduplicated at 1e-9. The visitor returns false to stop early.
inline VertexEnumStats vertex_enumerate_visit(
    const MergePolytope& poly, const std::function<bool(const Channel&)>& visit,
    long long vertex_cap = kDefaultVertexCap, long long base_cap = kDefaultBaseCap) {
  if (vertex_cap < 1 || base_cap < 1)
    throw std::invalid_argument("vertex_enumerate: caps must be positive");
  VertexEnumStats stats;
  const int n_vars = poly.in_size * poly.out_size;
  if (n_vars > 64)
    throw std::invalid_argument("vertex_enumerate: dimension exceeds the 64-variable guard");

  const auto emit = [&](const Channel& t) -> bool {
    ++stats.vertices_found;
    const bool keep_going = visit(t);
    if (stats.vertices_found >= vertex_cap || !keep_going) return false;
    return true;
  };

  if (poly.pairs_vacuous) {
    // product of per-column simplices: vertices are exactly the deterministic maps
    std::vector<int> map(static_cast<std::size_t>(poly.in_size), 0);
    bool more = true;
    while (more) {
      ++stats.bases_examined;
      if (!emit(deterministic_channel(poly.out_size, map))) {
        stats.truncated = true;
        return stats;
      }
      if (stats.bases_examined >= base_cap) {
        stats.truncated = true;
        return stats;
      }
      more = false;
      for (int x = poly.in_size - 1; x >= 0; --x) {
        if (++map[static_cast<std::size_t>(x)] < poly.out_size) {
          more = true;
          break;
        }
        map[static_cast<std::size_t>(x)] = 0;
      }
    }
    return stats;
  }

  std::vector<std::vector<double>> rows = poly.eq_rows;
  std::vector<double> rhs = poly.eq_rhs;
  detail::reduce_equalities(rows, rhs);
  const int r = static_cast<int>(rows.size());
  if (r == 0 || r > n_vars)
    throw std::runtime_error("vertex_enumerate: degenerate equality system");

  Eigen::MatrixXd reduced(r, n_vars);
  Eigen::VectorXd reduced_rhs(r);
  for (int i = 0; i < r; ++i) {
    reduced_rhs(i) = rhs[static_cast<std::size_t>(i)];
    for (int j = 0; j < n_vars; ++j)
      reduced(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }

  std::unordered_set<std::string> seen;
  std::vector<int> basis(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) basis[static_cast<std::size_t>(i)] = i;

  Eigen::MatrixXd sub(r, r);
  Eigen::VectorXd sol(r);
  std::vector<double> entries;
  bool more = true;
  while (more) {
    ++stats.bases_examined;
    for (int i = 0; i < r; ++i) sub.col(i) = reduced.col(basis[static_cast<std::size_t>(i)]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
    lu.setThreshold(kPivotTol);
    if (lu.isInvertible()) {
      sol = lu.solve(reduced_rhs);
      bool feasible = true;
      for (int i = 0; i < r; ++i)
        if (sol(i) < -kVertexFeasTol) {
          feasible = false;
          break;
        }
      if (feasible) {
        entries.assign(static_cast<std::size_t>(n_vars), 0.0);
        for (int i = 0; i < r; ++i)
          entries[static_cast<std::size_t>(basis[static_cast<std::size_t>(i)])] =
              std::max(0.0, sol(i));
        if (seen.insert(detail::quantized_key(entries)).second) {
          Channel t;
          t.out_size = poly.out_size;
          t.in_size = poly.in_size;
          t.a.assign(static_cast<std::size_t>(n_vars), 0.0);
          for (int x = 0; x < poly.in_size; ++x) {
            double colsum = 0.0;
            for (int y = 0; y < poly.out_size; ++y)
              colsum += entries[static_cast<std::size_t>(x * poly.out_size + y)];
            for (int y = 0; y < poly.out_size; ++y)
              t.entry(y, x) = entries[static_cast<std::size_t>(x * poly.out_size + y)] / colsum;
          }
          if (!emit(t)) {
            stats.truncated = true;
            return stats;
          }
        }
      }
    }

    if (stats.bases_examined >= base_cap) {
      stats.truncated = true;
      return stats;
    }
    // next r-combination of {0..n_vars-1} in lexicographic order
    more = false;
    for (int i = r - 1; i >= 0; --i) {
      if (basis[static_cast<std::size_t>(i)] < n_vars - (r - i)) {
        ++basis[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < r; ++j)
          basis[static_cast<std::size_t>(j)] = basis[static_cast<std::size_t>(j - 1)] + 1;
        more = true;
        break;
      }
    }
  }
  if (stats.vertices_found == 0)
    throw std::runtime_error("vertex_enumerate: no feasible vertex found");
  return stats;
}

inline std::vector<Channel> vertex_enumerate(const MergePolytope& poly,
                                             long long vertex_cap = kDefaultVertexCap,
                                             long long base_cap = kDefaultBaseCap,
                                             VertexEnumStats* stats_out = nullptr) {
  std::vector<Channel> out;
  VertexEnumStats stats = vertex_enumerate_visit(
      poly,
      [&](const Channel& t) {
        out.push_back(t);
        return true;
      },
      vertex_cap, base_cap);
  if (stats_out) *stats_out = stats;
  return out;
}

}  // namespace pqcd
