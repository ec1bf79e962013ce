#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pqcd/channel.hpp"
#include "pqcd/design.hpp"
#include "pqcd/partition.hpp"
#include "pqcd/pmf.hpp"
#include "pqcd/privacy.hpp"
#include "pqcd/rng.hpp"
#include "pqcd/signal_model.hpp"

namespace pqcd {

struct SmoothParams {
  double k = 1000.0;        // arctan sharpness
  double tau = 1e-6;        // L1 smoothing constant
  double rho0 = 1.0;        // initial penalty weight
  double rho_growth = 10.0; // penalty multiplier per outer iteration
  int outer_iters = 8;
  int inner_iters = 500;
  double step0 = 0.1;       // backtracking line search halves from here
  double tol = 1e-9;        // inner stagnation tolerance
  int out_size = 0;         // 0 means same as the input alphabet
};

inline void validate_smooth_params(const SmoothParams& p) {
  if (!(p.k > 0.0)) throw std::invalid_argument("SmoothParams: k must be > 0");
  if (!(p.tau > 0.0)) throw std::invalid_argument("SmoothParams: tau must be > 0");
  if (!(p.rho0 > 0.0)) throw std::invalid_argument("SmoothParams: rho0 must be > 0");
  if (!(p.rho_growth > 1.0)) throw std::invalid_argument("SmoothParams: rho_growth must be > 1");
  if (p.outer_iters < 1 || p.inner_iters < 1)
    throw std::invalid_argument("SmoothParams: iteration counts must be >= 1");
  if (!(p.step0 > 0.0)) throw std::invalid_argument("SmoothParams: step0 must be > 0");
  if (p.tol < 0.0) throw std::invalid_argument("SmoothParams: tol must be >= 0");
}

namespace detail {

// tau-smoothed L1 distance, zero exactly when the vectors coincide
inline double smoothed_l1(const Pmf& a, const Pmf& b, double tau) {
  double total = 0.0;
  for (int y = 0; y < a.size(); ++y) {
    const double d = a[y] - b[y];
    total += std::sqrt(d * d + tau * tau) - tau;
  }
  return total;
}

inline double arctan_gate(double dist, double k) {
  return 0.5 + std::atan(k * dist) / std::numbers::pi;
}

}  // namespace detail

// continuous surrogate for the number of distinct sanitized images; identical
// images still contribute 1/2 per gate, so merged laws never reach exactly 1
inline double smoothed_distinct_count(const Channel& t, const SignalModel& m, double k,
                                      double tau) {
  if (!(k > 0.0)) throw std::invalid_argument("smoothed_distinct_count: k must be > 0");
  const std::vector<Pmf> images = sanitized_images(t, m);
  const int n = static_cast<int>(images.size());
  double count = 1.0;
  for (int i = 1; i < n; ++i) {
    double prod = 1.0;
    for (int j = 0; j < i; ++j)
      prod *= detail::arctan_gate(detail::smoothed_l1(images[static_cast<std::size_t>(i)],
                                                      images[static_cast<std::size_t>(j)], tau),
                                  k);
    count += prod;
  }
  return count;
}

namespace detail {

inline constexpr double kLogFloor = 1e-30;

// d/dT of E_I[KL(T g_I || T f)], indexed like Channel::a
inline std::vector<double> objective_gradient(const Channel& t, const SignalModel& m) {
  const int in = t.in_size;
  const int out = t.out_size;
  std::vector<double> grad(static_cast<std::size_t>(in * out), 0.0);
  const Pmf w = apply_channel(t, m.pre);
  for (int i = 0; i < m.num_post(); ++i) {
    const double pi = m.prior[i];
    if (pi == 0.0) continue;
    const Pmf u = apply_channel(t, m.post[static_cast<std::size_t>(i)]);
    for (int y = 0; y < out; ++y) {
      const double uy = std::max(u[y], kLogFloor);
      const double wy = std::max(w[y], kLogFloor);
      const double log_ratio = std::log(uy / wy);
      for (int x = 0; x < in; ++x) {
        grad[static_cast<std::size_t>(y * in + x)] +=
            pi * (m.post[static_cast<std::size_t>(i)][x] * (log_ratio + 1.0) -
                  m.pre[x] * uy / wy);
      }
    }
  }
  return grad;
}

// d/dT of smoothed_distinct_count, indexed like Channel::a
inline std::vector<double> count_gradient(const Channel& t, const SignalModel& m, double k,
                                          double tau) {
  const int in = t.in_size;
  const int out = t.out_size;
  const std::vector<Pmf> images = sanitized_images(t, m);
  const int n = static_cast<int>(images.size());
  std::vector<double> grad(static_cast<std::size_t>(in * out), 0.0);
  for (int i = 1; i < n; ++i) {
    std::vector<double> gates(static_cast<std::size_t>(i));
    std::vector<double> dists(static_cast<std::size_t>(i));
    double prod = 1.0;
    for (int j = 0; j < i; ++j) {
      dists[static_cast<std::size_t>(j)] = smoothed_l1(images[static_cast<std::size_t>(i)],
                                                       images[static_cast<std::size_t>(j)], tau);
      gates[static_cast<std::size_t>(j)] = arctan_gate(dists[static_cast<std::size_t>(j)], k);
      prod *= gates[static_cast<std::size_t>(j)];
    }
    for (int j = 0; j < i; ++j) {
      const double l = dists[static_cast<std::size_t>(j)];
      const double gate_slope = (k / std::numbers::pi) / (1.0 + k * l * k * l);
      const double outer = prod / gates[static_cast<std::size_t>(j)] * gate_slope;
      for (int y = 0; y < out; ++y) {
        const double d =
            images[static_cast<std::size_t>(i)][y] - images[static_cast<std::size_t>(j)][y];
        const double abs_slope = d / std::sqrt(d * d + tau * tau);
        const double coeff = outer * abs_slope;
        if (coeff == 0.0) continue;
        for (int x = 0; x < in; ++x) {
          grad[static_cast<std::size_t>(y * in + x)] +=
              coeff * (m.post[static_cast<std::size_t>(i)][x] -
                       m.post[static_cast<std::size_t>(j)][x]);
        }
      }
    }
  }
  return grad;
}

// Euclidean projection of one vector onto the probability simplex
inline void project_to_simplex(std::vector<double>& v) {
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cum = 0.0;
  double theta = 0.0;
  int support = 0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cum += u[j];
    const double cand = (cum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - cand > 0.0) {
      support = static_cast<int>(j + 1);
      theta = cand;
    }
  }
  if (support == 0) {  // all mass collapses onto one coordinate
    theta = (cum - 1.0) / static_cast<double>(u.size());
  }
  for (double& x : v) x = std::max(0.0, x - theta);
}

inline void project_columns(Channel& t) {
  std::vector<double> col(static_cast<std::size_t>(t.out_size));
  for (int x = 0; x < t.in_size; ++x) {
    for (int y = 0; y < t.out_size; ++y) col[static_cast<std::size_t>(y)] = t.entry(y, x);
    project_to_simplex(col);
    for (int y = 0; y < t.out_size; ++y) t.entry(y, x) = col[static_cast<std::size_t>(y)];
  }
}

// Dykstra's alternating projection onto {T : merge equalities, column sums} n {T >= 0}
inline Channel project_to_merge_polytope(const Channel& start, const SignalModel& m,
                                         const Partition& part) {
  const int in = start.in_size;
  const int out = start.out_size;
  const int n_vars = in * out;
  std::vector<std::pair<int, int>> pairs;
  std::vector<int> last(static_cast<std::size_t>(part.num_blocks), -1);
  for (int i = 0; i < part.size(); ++i) {
    const int b = part.block_of[static_cast<std::size_t>(i)];
    if (last[static_cast<std::size_t>(b)] >= 0)
      pairs.emplace_back(last[static_cast<std::size_t>(b)], i);
    last[static_cast<std::size_t>(b)] = i;
  }
  const int n_rows = in + out * static_cast<int>(pairs.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_rows, n_vars);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n_rows);
  for (int x = 0; x < in; ++x) {
    for (int y = 0; y < out; ++y) a(x, y * in + x) = 1.0;
    b(x) = 1.0;
  }
  int row = in;
  for (const auto& [i, j] : pairs) {
    for (int y = 0; y < out; ++y, ++row) {
      for (int x = 0; x < in; ++x)
        a(row, y * in + x) = m.post[static_cast<std::size_t>(i)][x] -
                             m.post[static_cast<std::size_t>(j)][x];
    }
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);

  Eigen::VectorXd x(n_vars);
  for (int v = 0; v < n_vars; ++v) x(v) = start.a[static_cast<std::size_t>(v)];
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n_vars);
  Eigen::VectorXd q = Eigen::VectorXd::Zero(n_vars);
  for (int it = 0; it < 20000; ++it) {
    const Eigen::VectorXd xp = x + p;
    const Eigen::VectorXd y_aff = xp - cod.solve(a * xp - b);
    p = xp - y_aff;
    const Eigen::VectorXd yq = y_aff + q;
    const Eigen::VectorXd x_next = yq.cwiseMax(0.0);
    q = yq - x_next;
    x = x_next;
    const double eq_resid = (a * x - b).cwiseAbs().maxCoeff();
    if (eq_resid <= 1e-13) break;
  }
  Channel t;
  t.out_size = out;
  t.in_size = in;
  t.a.assign(static_cast<std::size_t>(n_vars), 0.0);
  for (int v = 0; v < n_vars; ++v) t.a[static_cast<std::size_t>(v)] = std::max(0.0, x(v));
  for (int cx = 0; cx < in; ++cx) {
    double colsum = 0.0;
    for (int y = 0; y < out; ++y) colsum += t.entry(y, cx);
    for (int y = 0; y < out; ++y) t.entry(y, cx) /= colsum;
  }
  return t;
}

}  // namespace detail

struct AuglagTraceRow {
  int outer = 0;
  double rho = 0.0;
  double lambda = 0.0;
  double objective = 0.0;
  double count = 0.0;
  double violation = 0.0;  // max(0, count - m)
};

struct AuglagDiagnostics {
  int best_restart = -1;
  double smooth_objective = 0.0;
  double smooth_count = 0.0;
  std::vector<AuglagTraceRow> trace;  // best restart, one row per outer iteration
};

struct AuglagError : std::runtime_error {
  Channel best_iterate;
  double smooth_objective = 0.0;
  double smooth_count = 0.0;
  AuglagError(const std::string& msg, Channel iterate, double objective, double count)
      : std::runtime_error(msg),
        best_iterate(std::move(iterate)),
        smooth_objective(objective),
        smooth_count(count) {}
};

namespace detail {

struct RestartOutcome {
  bool feasible = false;
  Channel channel;          // rounded and projected when feasible, raw iterate otherwise
  Partition partition;      // induced by the rounded channel
  double exact_value = 0.0; // recomputed on the rounded channel
  double smooth_objective = 0.0;
  double smooth_count = 0.0;
  std::vector<AuglagTraceRow> trace;
};

inline double penalized_merit(double objective, double count, double m_budget, double lambda,
                              double rho) {
  const double shifted = std::max(0.0, lambda / rho + (count - m_budget));
  return objective - 0.5 * rho * shifted * shifted;
}

inline RestartOutcome run_one_restart(const SignalModel& m, double m_budget,
                                      const SmoothParams& params, const Channel& init) {
  const int in = init.in_size;
  const int out = init.out_size;
  const int n_vars = in * out;
  Channel t = init;
  double lambda = 0.0;
  double rho = params.rho0;
  RestartOutcome outcome;

  const auto objective_at = [&](const Channel& c) { return expected_kl_objective(c, m); };
  const auto count_at = [&](const Channel& c) {
    return smoothed_distinct_count(c, m, params.k, params.tau);
  };

  for (int outer = 0; outer < params.outer_iters; ++outer) {
    double merit = penalized_merit(objective_at(t), count_at(t), m_budget, lambda, rho);
    for (int inner = 0; inner < params.inner_iters; ++inner) {
      const double count = count_at(t);
      const double shifted = std::max(0.0, lambda / rho + (count - m_budget));
      const std::vector<double> grad_f = objective_gradient(t, m);
      std::vector<double> grad(static_cast<std::size_t>(n_vars));
      if (shifted > 0.0) {
        const std::vector<double> grad_c = count_gradient(t, m, params.k, params.tau);
        for (int v = 0; v < n_vars; ++v)
          grad[static_cast<std::size_t>(v)] =
              grad_f[static_cast<std::size_t>(v)] - rho * shifted * grad_c[static_cast<std::size_t>(v)];
      } else {
        grad = grad_f;
      }

      bool accepted = false;
      double step = params.step0;
      for (int half = 0; half < 40; ++half) {
        Channel trial = t;
        for (int v = 0; v < n_vars; ++v)
          trial.a[static_cast<std::size_t>(v)] += step * grad[static_cast<std::size_t>(v)];
        project_columns(trial);
        const double trial_merit =
            penalized_merit(objective_at(trial), count_at(trial), m_budget, lambda, rho);
        if (std::isfinite(trial_merit) && trial_merit > merit + 1e-15) {
          const bool stalled = trial_merit - merit <= params.tol * (1.0 + std::abs(merit));
          t = std::move(trial);
          merit = trial_merit;
          accepted = true;
          if (stalled) inner = params.inner_iters;  // converged for this subproblem
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;  // stationary within line-search resolution
    }
    const double objective = objective_at(t);
    const double count = count_at(t);
    const double violation = std::max(0.0, count - m_budget);
    outcome.trace.push_back({outer, rho, lambda, objective, count, violation});
    lambda = std::max(0.0, lambda + rho * (count - m_budget));
    rho *= params.rho_growth;
  }

  outcome.smooth_objective = objective_at(t);
  outcome.smooth_count = count_at(t);

  const std::vector<Pmf> images = sanitized_images(t, m);
  const Partition rounded = induced_partition(images, 10.0 * params.tau);
  if (rounded.num_blocks > static_cast<int>(m_budget)) {
    outcome.feasible = false;
    outcome.channel = t;
    outcome.partition = rounded;
    return outcome;
  }
  Channel projected = project_to_merge_polytope(t, m, rounded);
  outcome.feasible = true;
  outcome.channel = projected;
  outcome.partition = induced_partition(sanitized_images(projected, m), kImageGroupTol);
  outcome.exact_value = objective_at(projected);
  return outcome;
}

}  // namespace detail

// locally optimal maximal-leakage design: augmented-Lagrangian outer loop on the
// constraint smoothed count <= 2^eps, projected-gradient ascent inside, best of
// identity plus Dirichlet restarts (run in parallel, reduced deterministically)
inline DesignResult auglag_design_ml(const SignalModel& m, double epsilon_bits,
                                     const SmoothParams& params = {}, int restarts = 10,
                                     std::uint64_t seed = 1,
                                     AuglagDiagnostics* diagnostics = nullptr) {
  validate_signal_model(m);
  validate_smooth_params(params);
  if (restarts < 1) throw std::invalid_argument("auglag_design_ml: restarts must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  PrivacyBudget budget{epsilon_bits};
  const int max_blocks = std::min<long long>(budget.max_blocks(), m.num_post());
  const double m_budget = static_cast<double>(max_blocks);
  const int in = m.alphabet_size();
  const int out = params.out_size > 0 ? params.out_size : in;
  if (out > in) throw std::invalid_argument("auglag_design_ml: output alphabet larger than input");

  std::vector<Channel> inits;
  inits.reserve(static_cast<std::size_t>(restarts));
  {
    std::vector<int> map(static_cast<std::size_t>(in));
    for (int x = 0; x < in; ++x) map[static_cast<std::size_t>(x)] = std::min(x, out - 1);
    inits.push_back(deterministic_channel(out, map));
  }
  for (int r = 1; r < restarts; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    inits.push_back(random_channel(out, in, rng));
  }

  std::vector<std::future<detail::RestartOutcome>> futures;
  futures.reserve(inits.size());
  for (const Channel& init : inits)
    futures.push_back(std::async(std::launch::async, [&m, m_budget, &params, init] {
      return detail::run_one_restart(m, m_budget, params, init);
    }));

  std::vector<detail::RestartOutcome> outcomes;
  outcomes.reserve(futures.size());
  for (auto& f : futures) outcomes.push_back(f.get());

  int best = -1;
  for (int r = 0; r < static_cast<int>(outcomes.size()); ++r) {
    if (!outcomes[static_cast<std::size_t>(r)].feasible) continue;
    if (best < 0 || outcomes[static_cast<std::size_t>(r)].exact_value >
                        outcomes[static_cast<std::size_t>(best)].exact_value)
      best = r;
  }
  if (best < 0) {
    int best_raw = 0;
    for (int r = 1; r < static_cast<int>(outcomes.size()); ++r)
      if (outcomes[static_cast<std::size_t>(r)].smooth_objective >
          outcomes[static_cast<std::size_t>(best_raw)].smooth_objective)
        best_raw = r;
    const auto& raw = outcomes[static_cast<std::size_t>(best_raw)];
    throw AuglagError(
        "auglag_design_ml: no restart produced a rounded channel within the block budget "
        "(best smoothed objective " +
            std::to_string(raw.smooth_objective) + ", smoothed count " +
            std::to_string(raw.smooth_count) + ")",
        raw.channel, raw.smooth_objective, raw.smooth_count);
  }

  const detail::RestartOutcome& chosen = outcomes[static_cast<std::size_t>(best)];
  DesignResult result;
  result.channel = chosen.channel;
  result.value = chosen.exact_value;
  result.partition = chosen.partition;
  result.epsilon_bits = epsilon_bits;
  result.max_blocks = max_blocks;
  result.approximate = true;  // local method, no global certificate
  result.stats.partitions_examined = 0;
  result.stats.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  if (diagnostics != nullptr) {
    diagnostics->best_restart = best;
    diagnostics->smooth_objective = chosen.smooth_objective;
    diagnostics->smooth_count = chosen.smooth_count;
    diagnostics->trace = chosen.trace;
  }
  return result;
}

}  // namespace pqcd
