#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace pqcd {

inline constexpr double kLpFeasTol = 1e-7;
inline constexpr double kLpPivotTol = 1e-9;

enum class LpStatus { optimal, infeasible, unbounded };

// one constraint row: a . x (sense) b with sense in {'<', '>', '='} meaning <=, >=, =
struct LpRow {
  std::vector<double> a;
  char sense = '<';
  double b = 0.0;
};

// maximize objective . x subject to rows, x >= 0
struct LinearProgram {
  int num_vars = 0;
  std::vector<double> objective;
  std::vector<LpRow> rows;
};

struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  std::vector<double> x;
  double value = 0.0;
};

namespace detail {

// dense tableau: body rows are [A | rhs], cost row is [reduced costs | -objective]
struct Tableau {
  std::vector<std::vector<double>> row;  // m rows, each n_total + 1 wide
  std::vector<double> cost;              // n_total + 1 wide
  std::vector<int> basis;                // basic variable per row
  int n_total = 0;
};

inline void tableau_pivot(Tableau& t, int r, int c) {
  const double piv = t.row[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  if (std::abs(piv) <= 1e-12)
    throw std::runtime_error("simplex_solve: numerical singularity, pivot magnitude " +
                             std::to_string(std::abs(piv)) + " below 1e-12");
  auto& pivot_row = t.row[static_cast<std::size_t>(r)];
  for (double& v : pivot_row) v /= piv;
  for (std::size_t i = 0; i < t.row.size(); ++i) {
    if (static_cast<int>(i) == r) continue;
    const double factor = t.row[i][static_cast<std::size_t>(c)];
    if (factor == 0.0) continue;
    for (std::size_t j = 0; j <= static_cast<std::size_t>(t.n_total); ++j)
      t.row[i][j] -= factor * pivot_row[j];
    t.row[i][static_cast<std::size_t>(c)] = 0.0;
  }
  const double cfactor = t.cost[static_cast<std::size_t>(c)];
  if (cfactor != 0.0) {
    for (std::size_t j = 0; j <= static_cast<std::size_t>(t.n_total); ++j)
      t.cost[j] -= cfactor * pivot_row[j];
    t.cost[static_cast<std::size_t>(c)] = 0.0;
  }
  t.basis[static_cast<std::size_t>(r)] = c;
}

// Bland's rule keeps the walk finite: lowest improving column enters, among
// minimum-ratio rows the one whose basic variable has the lowest index leaves
inline LpStatus tableau_iterate(Tableau& t, int allowed_cols) {
  const int m = static_cast<int>(t.row.size());
  for (long long iter = 0; iter < 200000; ++iter) {
    int enter = -1;
    for (int j = 0; j < allowed_cols; ++j)
      if (t.cost[static_cast<std::size_t>(j)] > kLpPivotTol) {
        enter = j;
        break;
      }
    if (enter < 0) return LpStatus::optimal;
    int leave = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      const double coef = t.row[static_cast<std::size_t>(i)][static_cast<std::size_t>(enter)];
      if (coef <= kLpPivotTol) continue;
      const double ratio =
          t.row[static_cast<std::size_t>(i)][static_cast<std::size_t>(t.n_total)] / coef;
      if (ratio < best_ratio - 1e-12 ||
          (ratio < best_ratio + 1e-12 && leave >= 0 &&
           t.basis[static_cast<std::size_t>(i)] < t.basis[static_cast<std::size_t>(leave)])) {
        best_ratio = ratio;
        leave = i;
      }
    }
    if (leave < 0) return LpStatus::unbounded;
    tableau_pivot(t, leave, enter);
  }
  throw std::runtime_error("simplex_solve: iteration cap exceeded");
}

}  // namespace detail

inline LpSolution simplex_solve(const LinearProgram& lp) {
  if (lp.num_vars <= 0) throw std::invalid_argument("simplex_solve: num_vars must be positive");
  if (static_cast<int>(lp.objective.size()) != lp.num_vars)
    throw std::invalid_argument("simplex_solve: objective length mismatch");
  for (const LpRow& r : lp.rows) {
    if (static_cast<int>(r.a.size()) != lp.num_vars)
      throw std::invalid_argument("simplex_solve: row length mismatch");
    if (r.sense != '<' && r.sense != '>' && r.sense != '=')
      throw std::invalid_argument("simplex_solve: unknown row sense");
    for (double v : r.a)
      if (!std::isfinite(v)) throw std::invalid_argument("simplex_solve: nonfinite coefficient");
    if (!std::isfinite(r.b)) throw std::invalid_argument("simplex_solve: nonfinite rhs");
  }
  for (double v : lp.objective)
    if (!std::isfinite(v)) throw std::invalid_argument("simplex_solve: nonfinite objective");

  const int m = static_cast<int>(lp.rows.size());
  const int n = lp.num_vars;

  // normalize to nonnegative rhs, then add slack/surplus and artificial columns
  std::vector<std::vector<double>> a(static_cast<std::size_t>(m));
  std::vector<double> b(static_cast<std::size_t>(m));
  std::vector<char> sense(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    a[static_cast<std::size_t>(i)] = lp.rows[static_cast<std::size_t>(i)].a;
    b[static_cast<std::size_t>(i)] = lp.rows[static_cast<std::size_t>(i)].b;
    sense[static_cast<std::size_t>(i)] = lp.rows[static_cast<std::size_t>(i)].sense;
    if (b[static_cast<std::size_t>(i)] < 0.0) {
      for (double& v : a[static_cast<std::size_t>(i)]) v = -v;
      b[static_cast<std::size_t>(i)] = -b[static_cast<std::size_t>(i)];
      if (sense[static_cast<std::size_t>(i)] == '<')
        sense[static_cast<std::size_t>(i)] = '>';
      else if (sense[static_cast<std::size_t>(i)] == '>')
        sense[static_cast<std::size_t>(i)] = '<';
    }
  }

  int n_slack = 0;
  for (int i = 0; i < m; ++i)
    if (sense[static_cast<std::size_t>(i)] != '=') ++n_slack;
  const int n_art = m;  // one artificial per row keeps the start basis trivial
  const int n_total = n + n_slack + n_art;

  detail::Tableau t;
  t.n_total = n_total;
  t.row.assign(static_cast<std::size_t>(m),
               std::vector<double>(static_cast<std::size_t>(n_total + 1), 0.0));
  t.basis.assign(static_cast<std::size_t>(m), -1);
  int slack_at = n;
  for (int i = 0; i < m; ++i) {
    auto& row = t.row[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j)
      row[static_cast<std::size_t>(j)] = a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    if (sense[static_cast<std::size_t>(i)] == '<')
      row[static_cast<std::size_t>(slack_at++)] = 1.0;
    else if (sense[static_cast<std::size_t>(i)] == '>')
      row[static_cast<std::size_t>(slack_at++)] = -1.0;
    row[static_cast<std::size_t>(n + n_slack + i)] = 1.0;
    row[static_cast<std::size_t>(n_total)] = b[static_cast<std::size_t>(i)];
    t.basis[static_cast<std::size_t>(i)] = n + n_slack + i;
  }

  // phase 1: drive the artificials to zero
  t.cost.assign(static_cast<std::size_t>(n_total + 1), 0.0);
  for (int j = n + n_slack; j < n_total; ++j) t.cost[static_cast<std::size_t>(j)] = -1.0;
  for (int i = 0; i < m; ++i) {
    const double factor = t.cost[static_cast<std::size_t>(t.basis[static_cast<std::size_t>(i)])];
    if (factor == 0.0) continue;
    for (std::size_t j = 0; j <= static_cast<std::size_t>(n_total); ++j)
      t.cost[j] -= factor * t.row[static_cast<std::size_t>(i)][j];
  }
  detail::tableau_iterate(t, n_total);
  const double phase1 = -t.cost[static_cast<std::size_t>(n_total)];
  if (phase1 < -kLpFeasTol) {
    LpSolution sol;
    sol.status = LpStatus::infeasible;
    return sol;
  }

  // pivot leftover artificials out of the basis, or drop their redundant rows
  for (int i = 0; i < m; ++i) {
    if (t.basis[static_cast<std::size_t>(i)] < n + n_slack) continue;
    int enter = -1;
    for (int j = 0; j < n + n_slack; ++j)
      if (std::abs(t.row[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) > kLpPivotTol) {
        enter = j;
        break;
      }
    if (enter >= 0) {
      detail::tableau_pivot(t, i, enter);
    } else {
      t.basis[static_cast<std::size_t>(i)] = -1;  // redundant all-zero row
    }
  }

  // phase 2: real objective, artificial columns frozen
  t.cost.assign(static_cast<std::size_t>(n_total + 1), 0.0);
  for (int j = 0; j < n; ++j) t.cost[static_cast<std::size_t>(j)] = lp.objective[static_cast<std::size_t>(j)];
  for (int i = 0; i < m; ++i) {
    const int bi = t.basis[static_cast<std::size_t>(i)];
    if (bi < 0) continue;
    const double factor = t.cost[static_cast<std::size_t>(bi)];
    if (factor == 0.0) continue;
    for (std::size_t j = 0; j <= static_cast<std::size_t>(n_total); ++j)
      t.cost[j] -= factor * t.row[static_cast<std::size_t>(i)][j];
  }
  // remove dropped rows before iterating so basis bookkeeping stays simple
  {
    detail::Tableau kept;
    kept.n_total = t.n_total;
    kept.cost = t.cost;
    for (std::size_t i = 0; i < t.row.size(); ++i)
      if (t.basis[i] >= 0) {
        kept.row.push_back(std::move(t.row[i]));
        kept.basis.push_back(t.basis[i]);
      }
    t = std::move(kept);
  }
  const LpStatus status = detail::tableau_iterate(t, n + n_slack);
  LpSolution sol;
  sol.status = status;
  if (status != LpStatus::optimal) return sol;
  sol.x.assign(static_cast<std::size_t>(n), 0.0);
  for (std::size_t i = 0; i < t.row.size(); ++i)
    if (t.basis[i] < n)
      sol.x[static_cast<std::size_t>(t.basis[i])] = t.row[i][static_cast<std::size_t>(t.n_total)];
  sol.value = -t.cost[static_cast<std::size_t>(t.n_total)];
  return sol;
}

}  // namespace pqcd
