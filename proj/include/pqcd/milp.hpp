#pragma once

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pqcd/channel.hpp"
#include "pqcd/lp.hpp"
#include "pqcd/pmf.hpp"
#include "pqcd/privacy.hpp"
#include "pqcd/signal_model.hpp"

namespace pqcd {

inline constexpr double kKlClamp = 1e6;  // stands in for infinite divergences (nats)
inline constexpr double kIntegralityTol = 1e-6;
inline constexpr long long kDefaultNodeLimit = 100000;

// MILP for the sequential-hypothesis-testing privacy design over a finite channel
// set: continuous mixture weights phi (per sensor) and thresholds xi, binary
// argmin selectors delta over the protected set
struct MilpProblem {
  LinearProgram lp;  // relaxation; binaries carry explicit <= 1 rows
  std::vector<int> binary_vars;
  std::vector<int> phi_offset;  // per sensor
  std::vector<int> phi_count;   // per sensor
  int xi_offset = 0;
  int delta_offset = 0;
  std::vector<int> i1;
  std::vector<int> i2;
  double eps1 = 0.0;
  double eps2 = 0.0;
  double big_m = 0.0;
};

namespace detail {

inline double clamped_kl(const Pmf& p, const Pmf& q) {
  const double v = kl_divergence(p, q);
  return std::isfinite(v) ? v : kKlClamp;
}

// expected detection payoff of one channel on one sensor, infinities clamped
inline double channel_objective(const Channel& t, const SignalModel& m) {
  const Pmf w = apply_channel(t, m.pre);
  double total = 0.0;
  for (int i = 0; i < m.num_post(); ++i)
    total += m.prior[i] * clamped_kl(apply_channel(t, m.post[static_cast<std::size_t>(i)]), w);
  return total;
}

}  // namespace detail

inline MilpProblem build_milp_sht(const DecentralizedModel& dm,
                                  const std::vector<std::vector<Channel>>& channel_sets,
                                  const std::vector<int>& i1, const std::vector<int>& i2,
                                  double eps1, double eps2) {
  validate_decentralized_model(dm);
  const int num_sensors = static_cast<int>(dm.sensors.size());
  if (static_cast<int>(channel_sets.size()) != num_sensors)
    throw std::invalid_argument("build_milp_sht: one channel set per sensor required");
  if (i1.size() <= 1) throw std::invalid_argument("build_milp_sht: |I1| must exceed 1");
  if (eps1 < 0.0 || eps2 < 0.0)
    throw std::invalid_argument("build_milp_sht: epsilons must be >= 0");
  const int n_laws = static_cast<int>(dm.prior.size());
  std::vector<int> all = i1;
  all.insert(all.end(), i2.begin(), i2.end());
  std::vector<int> seen_mark(static_cast<std::size_t>(n_laws), 0);
  for (int idx : all) {
    if (idx < 0 || idx >= n_laws)
      throw std::invalid_argument("build_milp_sht: hypothesis index out of range");
    if (seen_mark[static_cast<std::size_t>(idx)]++)
      throw std::invalid_argument("build_milp_sht: I1 and I2 must be disjoint index sets");
  }
  for (int k = 0; k < num_sensors; ++k) {
    if (channel_sets[static_cast<std::size_t>(k)].empty())
      throw std::invalid_argument("build_milp_sht: empty channel set");
    for (const Channel& t : channel_sets[static_cast<std::size_t>(k)]) {
      validate_channel(t);
      if (t.in_size != dm.sensors[static_cast<std::size_t>(k)].alphabet_size())
        throw std::invalid_argument("build_milp_sht: channel/model alphabet mismatch");
    }
  }

  MilpProblem p;
  p.i1 = i1;
  p.i2 = i2;
  p.eps1 = eps1;
  p.eps2 = eps2;
  const int n1 = static_cast<int>(i1.size());

  int offset = 0;
  for (int k = 0; k < num_sensors; ++k) {
    p.phi_offset.push_back(offset);
    p.phi_count.push_back(static_cast<int>(channel_sets[static_cast<std::size_t>(k)].size()));
    offset += p.phi_count.back();
  }
  p.xi_offset = offset;
  offset += n1;
  p.delta_offset = offset;
  offset += n1 * n1;
  const int n_vars = offset;

  // pairwise divergence coefficients kl[k][c][i][j] and per-channel objectives,
  // filled in parallel across channels
  std::vector<std::vector<std::vector<std::vector<double>>>> kl(
      static_cast<std::size_t>(num_sensors));
  std::vector<std::vector<double>> obj(static_cast<std::size_t>(num_sensors));
  {
    std::vector<std::future<void>> jobs;
    for (int k = 0; k < num_sensors; ++k) {
      const auto& set = channel_sets[static_cast<std::size_t>(k)];
      kl[static_cast<std::size_t>(k)].assign(
          set.size(), std::vector<std::vector<double>>(
                          static_cast<std::size_t>(n_laws),
                          std::vector<double>(static_cast<std::size_t>(n_laws), 0.0)));
      obj[static_cast<std::size_t>(k)].assign(set.size(), 0.0);
      for (std::size_t c = 0; c < set.size(); ++c) {
        jobs.push_back(std::async(std::launch::async, [&dm, &set, &kl, &obj, k, c, n_laws] {
          const SignalModel& sensor = dm.sensors[static_cast<std::size_t>(k)];
          const Channel& t = set[c];
          const std::vector<Pmf> images = sanitized_images(t, sensor);
          for (int i = 0; i < n_laws; ++i)
            for (int j = 0; j < n_laws; ++j) {
              if (i == j) continue;
              kl[static_cast<std::size_t>(k)][c][static_cast<std::size_t>(i)]
                [static_cast<std::size_t>(j)] =
                    detail::clamped_kl(images[static_cast<std::size_t>(i)],
                                       images[static_cast<std::size_t>(j)]);
            }
          obj[static_cast<std::size_t>(k)][c] = detail::channel_objective(t, sensor);
        }));
      }
    }
    for (auto& j : jobs) j.get();
  }

  // big-M: per-sensor worst protected-pair divergence, summed across sensors so
  // it dominates any mixture value of D(i,j)
  double big_m = 0.0;
  for (int k = 0; k < num_sensors; ++k) {
    double sensor_max = 0.0;
    for (std::size_t c = 0; c < channel_sets[static_cast<std::size_t>(k)].size(); ++c)
      for (int i : i1)
        for (int j : i1) {
          if (i == j) continue;
          sensor_max = std::max(sensor_max, kl[static_cast<std::size_t>(k)][c]
                                              [static_cast<std::size_t>(i)]
                                              [static_cast<std::size_t>(j)]);
        }
    big_m += sensor_max;
  }
  p.big_m = big_m;

  LinearProgram& lp = p.lp;
  lp.num_vars = n_vars;
  lp.objective.assign(static_cast<std::size_t>(n_vars), 0.0);
  for (int k = 0; k < num_sensors; ++k)
    for (int c = 0; c < p.phi_count[static_cast<std::size_t>(k)]; ++c)
      lp.objective[static_cast<std::size_t>(p.phi_offset[static_cast<std::size_t>(k)] + c)] =
          obj[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)];

  const auto divergence_row = [&](int i, int j) {
    std::vector<double> a(static_cast<std::size_t>(n_vars), 0.0);
    for (int k = 0; k < num_sensors; ++k)
      for (int c = 0; c < p.phi_count[static_cast<std::size_t>(k)]; ++c)
        a[static_cast<std::size_t>(p.phi_offset[static_cast<std::size_t>(k)] + c)] =
            kl[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)]
              [static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return a;
  };
  const auto xi_var = [&](int pos) { return p.xi_offset + pos; };
  const auto delta_var = [&](int jpos, int ipos) { return p.delta_offset + jpos * n1 + ipos; };

  // each sensor's mixture is a pmf of its own
  for (int k = 0; k < num_sensors; ++k) {
    LpRow row;
    row.a.assign(static_cast<std::size_t>(n_vars), 0.0);
    for (int c = 0; c < p.phi_count[static_cast<std::size_t>(k)]; ++c)
      row.a[static_cast<std::size_t>(p.phi_offset[static_cast<std::size_t>(k)] + c)] = 1.0;
    row.sense = '=';
    row.b = 1.0;
    lp.rows.push_back(std::move(row));
  }

  for (int ipos = 0; ipos < n1; ++ipos) {
    LpRow row;
    row.a.assign(static_cast<std::size_t>(n_vars), 0.0);
    row.a[static_cast<std::size_t>(xi_var(ipos))] = 1.0;
    row.sense = '<';
    row.b = eps1;
    lp.rows.push_back(std::move(row));
  }

  for (int jpos = 0; jpos < n1; ++jpos)
    for (int ipos = 0; ipos < n1; ++ipos) {
      const int v = delta_var(jpos, ipos);
      if (jpos == ipos) {
        LpRow pin;  // a law is never its own nearest neighbour
        pin.a.assign(static_cast<std::size_t>(n_vars), 0.0);
        pin.a[static_cast<std::size_t>(v)] = 1.0;
        pin.sense = '=';
        pin.b = 0.0;
        lp.rows.push_back(std::move(pin));
      } else {
        LpRow box;
        box.a.assign(static_cast<std::size_t>(n_vars), 0.0);
        box.a[static_cast<std::size_t>(v)] = 1.0;
        box.sense = '<';
        box.b = 1.0;
        lp.rows.push_back(std::move(box));
      }
      p.binary_vars.push_back(v);
    }

  // exactly one selected neighbour per protected law
  for (int ipos = 0; ipos < n1; ++ipos) {
    LpRow row;
    row.a.assign(static_cast<std::size_t>(n_vars), 0.0);
    for (int jpos = 0; jpos < n1; ++jpos)
      row.a[static_cast<std::size_t>(delta_var(jpos, ipos))] = 1.0;
    row.sense = '=';
    row.b = 1.0;
    lp.rows.push_back(std::move(row));
  }

  // xi(i) lower-bounds every protected divergence; the selected one is also
  // capped by xi(i), forcing xi(i) to the minimum over j
  for (int ipos = 0; ipos < n1; ++ipos) {
    for (int jpos = 0; jpos < n1; ++jpos) {
      if (jpos == ipos) continue;
      const int i = i1[static_cast<std::size_t>(ipos)];
      const int j = i1[static_cast<std::size_t>(jpos)];
      {
        LpRow row;
        row.a = divergence_row(i, j);
        row.a[static_cast<std::size_t>(xi_var(ipos))] = -1.0;
        row.sense = '>';
        row.b = 0.0;
        lp.rows.push_back(std::move(row));
      }
      {
        LpRow row;
        row.a = divergence_row(i, j);
        row.a[static_cast<std::size_t>(xi_var(ipos))] = -1.0;
        row.a[static_cast<std::size_t>(delta_var(jpos, ipos))] = big_m;
        row.sense = '<';
        row.b = big_m;
        lp.rows.push_back(std::move(row));
      }
    }
  }

  // public laws stay distinguishable from everything else
  for (int i : i2) {
    for (int j : all) {
      if (j == i) continue;
      LpRow row;
      row.a = divergence_row(i, j);
      row.sense = '>';
      row.b = eps2;
      lp.rows.push_back(std::move(row));
    }
  }
  return p;
}

inline MilpProblem build_milp_sht(const SignalModel& m, const std::vector<Channel>& channels,
                                  const std::vector<int>& i1, const std::vector<int>& i2,
                                  double eps1, double eps2) {
  DecentralizedModel dm;
  dm.sensors.push_back(m);
  dm.prior = m.prior;
  return build_milp_sht(dm, {channels}, i1, i2, eps1, eps2);
}

struct MilpResult {
  LpStatus status = LpStatus::infeasible;
  std::vector<std::vector<double>> phi;  // per sensor
  std::vector<double> xi;
  std::vector<std::vector<double>> delta;
  double value = 0.0;
  long long nodes_explored = 0;
};

namespace detail {

struct BnbNode {
  double bound = 0.0;
  long long order = 0;
  std::vector<std::pair<int, double>> fixings;  // (var, 0 or 1)
};

struct BnbNodeLess {
  bool operator()(const BnbNode& a, const BnbNode& b) const {
    if (a.bound != b.bound) return a.bound < b.bound;  // max-heap on bound
    return a.order > b.order;                          // then FIFO
  }
};

}  // namespace detail

inline MilpResult branch_and_bound(const MilpProblem& p,
                                   long long node_limit = kDefaultNodeLimit) {
  MilpResult result;
  const int num_sensors = static_cast<int>(p.phi_offset.size());
  const int n1 = static_cast<int>(p.i1.size());

  const auto solve_with = [&](const std::vector<std::pair<int, double>>& fixings) {
    LinearProgram lp = p.lp;
    for (const auto& [var, value] : fixings) {
      LpRow row;
      row.a.assign(static_cast<std::size_t>(lp.num_vars), 0.0);
      row.a[static_cast<std::size_t>(var)] = 1.0;
      row.sense = '=';
      row.b = value;
      lp.rows.push_back(std::move(row));
    }
    return simplex_solve(lp);
  };

  const auto extract = [&](const LpSolution& sol) {
    result.phi.clear();
    result.xi.clear();
    result.delta.clear();
    for (int k = 0; k < num_sensors; ++k) {
      std::vector<double> phi_k;
      for (int c = 0; c < p.phi_count[static_cast<std::size_t>(k)]; ++c)
        phi_k.push_back(
            sol.x[static_cast<std::size_t>(p.phi_offset[static_cast<std::size_t>(k)] + c)]);
      result.phi.push_back(std::move(phi_k));
    }
    for (int i = 0; i < n1; ++i)
      result.xi.push_back(sol.x[static_cast<std::size_t>(p.xi_offset + i)]);
    for (int j = 0; j < n1; ++j) {
      std::vector<double> row;
      for (int i = 0; i < n1; ++i)
        row.push_back(sol.x[static_cast<std::size_t>(p.delta_offset + j * n1 + i)]);
      result.delta.push_back(std::move(row));
    }
    result.value = sol.value;
  };

  std::priority_queue<detail::BnbNode, std::vector<detail::BnbNode>, detail::BnbNodeLess> open;
  long long order = 0;
  {
    detail::BnbNode root;
    root.bound = std::numeric_limits<double>::infinity();
    root.order = order++;
    open.push(std::move(root));
  }
  bool have_incumbent = false;
  double best_value = -std::numeric_limits<double>::infinity();

  while (!open.empty()) {
    if (result.nodes_explored >= node_limit) {
      std::string incumbent = have_incumbent
                                  ? "incumbent value " + std::to_string(best_value)
                                  : "no incumbent";
      throw std::runtime_error("branch_and_bound: node limit " + std::to_string(node_limit) +
                               " exceeded (" + incumbent + ")");
    }
    detail::BnbNode node = open.top();
    open.pop();
    if (have_incumbent && node.bound <= best_value + 1e-9) continue;
    ++result.nodes_explored;
    const LpSolution sol = solve_with(node.fixings);
    if (sol.status == LpStatus::unbounded)
      throw std::runtime_error("branch_and_bound: relaxation unbounded");
    if (sol.status == LpStatus::infeasible) continue;
    if (have_incumbent && sol.value <= best_value + 1e-9) continue;

    int branch_var = -1;
    double most_fractional = kIntegralityTol;
    for (int v : p.binary_vars) {
      const double value = sol.x[static_cast<std::size_t>(v)];
      const double frac = std::min(value - std::floor(value), std::ceil(value) - value);
      if (frac > most_fractional + 1e-12) {
        most_fractional = frac;
        branch_var = v;
      }
    }
    if (branch_var < 0) {  // integral: new incumbent
      if (!have_incumbent || sol.value > best_value) {
        have_incumbent = true;
        best_value = sol.value;
        extract(sol);
        result.status = LpStatus::optimal;
      }
      continue;
    }
    for (double fix : {0.0, 1.0}) {
      detail::BnbNode child;
      child.bound = sol.value;
      child.order = order++;
      child.fixings = node.fixings;
      child.fixings.emplace_back(branch_var, fix);
      open.push(std::move(child));
    }
  }
  if (!have_incumbent) result.status = LpStatus::infeasible;
  return result;
}

// end-to-end solve with an independent feasibility audit of the returned mixture
inline MilpResult solve_sht_milp(const DecentralizedModel& dm,
                                 const std::vector<std::vector<Channel>>& channel_sets,
                                 const std::vector<int>& i1, const std::vector<int>& i2,
                                 double eps1, double eps2,
                                 long long node_limit = kDefaultNodeLimit) {
  const MilpProblem p = build_milp_sht(dm, channel_sets, i1, i2, eps1, eps2);
  MilpResult result = branch_and_bound(p, node_limit);
  if (result.status != LpStatus::optimal) return result;
  std::vector<ChannelMixture> mixtures;
  for (std::size_t k = 0; k < channel_sets.size(); ++k) {
    ChannelMixture mix;
    mix.channels = channel_sets[k];
    mix.weights = result.phi[k];
    for (double& w : mix.weights) w = std::max(0.0, w);
    mixtures.push_back(std::move(mix));
  }
  std::vector<const SignalModel*> models;
  for (const SignalModel& s : dm.sensors) models.push_back(&s);
  const auto table = detail::mixture_divergence_table(mixtures, models);
  double k1 = 0.0;
  for (int i : i1) {
    double inner = std::numeric_limits<double>::infinity();
    for (int j : i1)
      if (j != i)
        inner = std::min(inner, table[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    k1 = std::max(k1, inner);
  }
  if (k1 > eps1 + kLpFeasTol)
    throw std::runtime_error("solve_sht_milp: returned mixture fails the privacy audit, K1 = " +
                             std::to_string(k1) + " > eps1 = " + std::to_string(eps1));
  if (!i2.empty()) {
    const auto [k1_check, k2] = detail::k_metrics_from_table(table, i1, i2);
    (void)k1_check;
    if (k2 < eps2 - kLpFeasTol)
      throw std::runtime_error(
          "solve_sht_milp: returned mixture fails the distinguishability audit, K2 = " +
          std::to_string(k2) + " < eps2 = " + std::to_string(eps2));
  }
  return result;
}

inline MilpResult solve_sht_milp(const SignalModel& m, const std::vector<Channel>& channels,
                                 const std::vector<int>& i1, const std::vector<int>& i2,
                                 double eps1, double eps2,
                                 long long node_limit = kDefaultNodeLimit) {
  DecentralizedModel dm;
  dm.sensors.push_back(m);
  dm.prior = m.prior;
  return solve_sht_milp(dm, {channels}, i1, i2, eps1, eps2, node_limit);
}

// human-readable LP-format text for cross-checks with external solvers
inline std::string export_milp_lp_format(const MilpProblem& p) {
  const int num_sensors = static_cast<int>(p.phi_offset.size());
  const int n1 = static_cast<int>(p.i1.size());
  std::vector<std::string> names(static_cast<std::size_t>(p.lp.num_vars));
  for (int k = 0; k < num_sensors; ++k)
    for (int c = 0; c < p.phi_count[static_cast<std::size_t>(k)]; ++c)
      names[static_cast<std::size_t>(p.phi_offset[static_cast<std::size_t>(k)] + c)] =
          "phi_" + std::to_string(k) + "_" + std::to_string(c);
  for (int i = 0; i < n1; ++i)
    names[static_cast<std::size_t>(p.xi_offset + i)] = "xi_" + std::to_string(i);
  for (int j = 0; j < n1; ++j)
    for (int i = 0; i < n1; ++i)
      names[static_cast<std::size_t>(p.delta_offset + j * n1 + i)] =
          "delta_" + std::to_string(j) + "_" + std::to_string(i);

  std::ostringstream out;
  out.precision(12);
  const auto write_terms = [&](const std::vector<double>& a) {
    bool first = true;
    for (std::size_t v = 0; v < a.size(); ++v) {
      if (a[v] == 0.0) continue;
      if (first) {
        out << (a[v] < 0 ? "- " : "");
      } else {
        out << (a[v] < 0 ? " - " : " + ");
      }
      out << std::abs(a[v]) << " " << names[v];
      first = false;
    }
    if (first) out << "0";
  };
  out << "Maximize\n obj: ";
  write_terms(p.lp.objective);
  out << "\nSubject To\n";
  for (std::size_t r = 0; r < p.lp.rows.size(); ++r) {
    out << " r" << r << ": ";
    write_terms(p.lp.rows[r].a);
    const char* rel = p.lp.rows[r].sense == '<' ? " <= " : (p.lp.rows[r].sense == '>' ? " >= " : " = ");
    out << rel << p.lp.rows[r].b << "\n";
  }
  out << "Binaries\n";
  for (int v : p.binary_vars) out << " " << names[static_cast<std::size_t>(v)];
  out << "\nEnd\n";
  return out.str();
}

}  // namespace pqcd
