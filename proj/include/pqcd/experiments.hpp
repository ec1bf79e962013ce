#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <future>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pqcd/csv.hpp"
#include "pqcd/design.hpp"
#include "pqcd/detect.hpp"
#include "pqcd/milp.hpp"
#include "pqcd/model_io.hpp"
#include "pqcd/privacy.hpp"
#include "pqcd/rng.hpp"
#include "pqcd/signal_model.hpp"
#include "pqcd/smooth.hpp"
#include "pqcd/svg.hpp"

namespace pqcd {

struct ExperimentConfig {
  std::string kind;  // ml-tradeoff | ml-timing | sht-tradeoff |
                     // decentralized-ml-scaling | decentralized-sht-scaling | detect
  std::string model_path;
  bool random_model = false;
  int random_alphabet = 3;
  int random_num_post = 3;
  std::uint64_t seed = 1;

  std::vector<double> epsilon_grid;  // bits, maximal-leakage designs
  std::vector<double> eps1_grid;     // nats, SHT designs
  std::vector<double> eps2_grid;     // nats
  std::vector<int> i1;
  std::vector<int> i2;

  std::vector<int> sensor_grid;
  bool identical_sensors = true;

  long long trials = 10000;
  std::vector<double> gamma_grid;
  double calibrate_tol = 0.25;
  long long horizon_cap = kDefaultHorizonCap;
  std::string sanitizer_path;

  SmoothParams smooth;
  int auglag_restarts = 10;
  ExactOptions exact;
  bool svg = false;
};

inline void validate_experiment_config(const ExperimentConfig& cfg) {
  static const std::vector<std::string> kinds = {
      "ml-tradeoff",  "ml-timing", "sht-tradeoff", "decentralized-ml-scaling",
      "decentralized-sht-scaling", "detect"};
  bool known = false;
  for (const std::string& k : kinds) known = known || k == cfg.kind;
  if (!known) throw std::invalid_argument("ExperimentConfig: unknown kind '" + cfg.kind + "'");
  if (!cfg.random_model && cfg.model_path.empty())
    throw std::invalid_argument("ExperimentConfig: need a model file or a random model with seed");
  if (cfg.trials < 1) throw std::invalid_argument("ExperimentConfig: trials must be >= 1");
  if (cfg.random_model && cfg.random_alphabet < 2)
    throw std::invalid_argument("ExperimentConfig: random alphabet must be >= 2");
  if (cfg.random_model && cfg.random_num_post < 1)
    throw std::invalid_argument("ExperimentConfig: random model needs >= 1 post-change law");
}

inline ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig cfg;
  if (!j.is_object()) throw std::invalid_argument("ExperimentConfig: expected a JSON object");
  cfg.kind = j.value("kind", std::string());
  cfg.model_path = j.value("model", std::string());
  cfg.random_model = j.value("random_model", false);
  cfg.random_alphabet = j.value("random_alphabet", 3);
  cfg.random_num_post = j.value("random_num_post", 3);
  cfg.seed = j.value("seed", static_cast<std::uint64_t>(1));
  if (j.contains("epsilon_grid")) cfg.epsilon_grid = j.at("epsilon_grid").get<std::vector<double>>();
  if (j.contains("eps1_grid")) cfg.eps1_grid = j.at("eps1_grid").get<std::vector<double>>();
  if (j.contains("eps2_grid")) cfg.eps2_grid = j.at("eps2_grid").get<std::vector<double>>();
  if (j.contains("i1")) cfg.i1 = j.at("i1").get<std::vector<int>>();
  if (j.contains("i2")) cfg.i2 = j.at("i2").get<std::vector<int>>();
  if (j.contains("sensor_grid")) cfg.sensor_grid = j.at("sensor_grid").get<std::vector<int>>();
  cfg.identical_sensors = j.value("identical_sensors", true);
  cfg.trials = j.value("trials", static_cast<long long>(10000));
  if (j.contains("gamma_grid")) cfg.gamma_grid = j.at("gamma_grid").get<std::vector<double>>();
  cfg.calibrate_tol = j.value("calibrate_tol", 0.25);
  cfg.horizon_cap = j.value("horizon_cap", kDefaultHorizonCap);
  cfg.sanitizer_path = j.value("sanitizer", std::string());
  if (j.contains("smooth")) {
    const json& s = j.at("smooth");
    cfg.smooth.k = s.value("k", cfg.smooth.k);
    cfg.smooth.tau = s.value("tau", cfg.smooth.tau);
    cfg.smooth.rho0 = s.value("rho0", cfg.smooth.rho0);
    cfg.smooth.rho_growth = s.value("rho_growth", cfg.smooth.rho_growth);
    cfg.smooth.outer_iters = s.value("outer_iters", cfg.smooth.outer_iters);
    cfg.smooth.inner_iters = s.value("inner_iters", cfg.smooth.inner_iters);
    cfg.smooth.step0 = s.value("step0", cfg.smooth.step0);
    cfg.smooth.tol = s.value("tol", cfg.smooth.tol);
  }
  cfg.auglag_restarts = j.value("auglag_restarts", 10);
  if (j.contains("exact")) {
    const json& e = j.at("exact");
    cfg.exact.vertex_cap = e.value("vertex_cap", cfg.exact.vertex_cap);
    cfg.exact.base_cap = e.value("base_cap", cfg.exact.base_cap);
  }
  cfg.svg = j.value("svg", false);
  validate_experiment_config(cfg);
  return cfg;
}

struct ExperimentOutput {
  std::vector<std::pair<std::string, CsvTable>> tables;
  std::vector<std::pair<std::string, std::string>> svgs;
};

namespace detail {

inline double elapsed_ms(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

inline SignalModel centralized_model(const ExperimentConfig& cfg) {
  if (cfg.random_model)
    return random_instance(cfg.random_alphabet, cfg.random_num_post, cfg.seed);
  const json j = load_json_file(cfg.model_path);
  if (json_is_decentralized(j))
    throw std::invalid_argument("this experiment kind needs a centralized model, got a "
                                "decentralized one: " + cfg.model_path);
  return signal_model_from_json(j, cfg.model_path);
}

inline std::string model_descriptor(const ExperimentConfig& cfg) {
  if (cfg.random_model)
    return "random(" + std::to_string(cfg.random_alphabet) + "," +
           std::to_string(cfg.random_num_post) + ")";
  return cfg.model_path;
}

inline DecentralizedModel scaled_model(const ExperimentConfig& cfg, int num_sensors) {
  if (cfg.random_model)
    return random_decentralized_instance(cfg.random_alphabet, cfg.random_num_post, num_sensors,
                                         cfg.identical_sensors, cfg.seed);
  if (!cfg.identical_sensors)
    throw std::invalid_argument(
        "scaling with a model file requires identical sensors (the file is replicated)");
  const SignalModel base = centralized_model(cfg);
  DecentralizedModel dm;
  dm.prior = base.prior;
  dm.sensors.assign(static_cast<std::size_t>(num_sensors), base);
  return dm;
}

// protected/public index sets: defaults take the first two laws as protected
inline std::pair<std::vector<int>, std::vector<int>> index_sets(const ExperimentConfig& cfg,
                                                                int num_post) {
  std::vector<int> i1 = cfg.i1;
  std::vector<int> i2 = cfg.i2;
  if (i1.empty()) {
    if (num_post < 2)
      throw std::invalid_argument("SHT experiments need at least two post-change laws");
    i1 = {0, 1};
    if (i2.empty())
      for (int i = 2; i < num_post; ++i) i2.push_back(i);
  }
  return {i1, i2};
}

}  // namespace detail

// privacy-performance sweep for the maximal-leakage designs; the exact solver
// memoizes partition subproblems across the grid, so each row's wall time
// reflects only the partitions that budget newly unlocks
inline CsvTable run_ml_tradeoff(const ExperimentConfig& cfg) {
  validate_experiment_config(cfg);
  const SignalModel model = detail::centralized_model(cfg);
  std::vector<double> grid = cfg.epsilon_grid;
  if (grid.empty())
    for (int b = 1; b <= model.num_post(); ++b) grid.push_back(std::log2(static_cast<double>(b)));

  CsvTable table;
  table.add_meta("kind", cfg.kind);
  table.add_meta("model", detail::model_descriptor(cfg));
  table.add_meta("seed", std::to_string(cfg.seed));
  table.add_meta("alphabet", std::to_string(model.alphabet_size()));
  table.add_meta("num_post", std::to_string(model.num_post()));
  table.columns = {"epsilon_bits", "exact_value", "auglag_value", "exact_ms", "auglag_ms"};

  ExactCache cache;
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    const double eps = grid[idx];
    std::string exact_value = "error";
    std::string auglag_value = "error";
    auto t0 = std::chrono::steady_clock::now();
    try {
      exact_value = format_number(exact_design_ml(model, eps, cfg.exact, &cache).value);
    } catch (const std::exception&) {
    }
    const double exact_ms = detail::elapsed_ms(t0);
    t0 = std::chrono::steady_clock::now();
    try {
      auglag_value = format_number(
          auglag_design_ml(model, eps, cfg.smooth, cfg.auglag_restarts,
                           derive_seed(cfg.seed, 100 + static_cast<std::uint64_t>(idx)))
              .value);
    } catch (const std::exception&) {
    }
    const double auglag_ms = detail::elapsed_ms(t0);
    table.add_row({format_number(eps), exact_value, auglag_value, format_number(exact_ms),
                   format_number(auglag_ms)});
  }
  return table;
}

// (eps1, eps2) feasibility-and-value map for the SHT design over the
// deterministic channel set; grid defaults stay inside the data-processing bounds
inline CsvTable run_sht_tradeoff(const ExperimentConfig& cfg) {
  validate_experiment_config(cfg);
  const SignalModel model = detail::centralized_model(cfg);
  const auto [i1, i2] = detail::index_sets(cfg, model.num_post());
  const std::vector<Channel> channels =
      deterministic_channel_set(model.alphabet_size(), model.alphabet_size());

  const double k1_max = k1_metric(model.post, i1);
  const double k2_max = i2.empty() ? 0.0 : k2_metric(model.post, i1, i2);
  std::vector<double> eps1 = cfg.eps1_grid;
  std::vector<double> eps2 = cfg.eps2_grid;
  if (eps1.empty())
    for (double f : {0.0, 0.25, 0.5, 0.75, 1.0}) eps1.push_back(f * k1_max);
  if (eps2.empty()) {
    if (i2.empty())
      eps2 = {0.0};
    else
      for (double f : {0.1, 0.4, 0.7, 1.0}) eps2.push_back(f * k2_max);
  }
  for (double e : eps1)
    if (e < 0.0 || e > k1_max * (1.0 + 1e-9) + 1e-12)
      throw std::invalid_argument("run_sht_tradeoff: eps1 grid leaves the achievable range [0, " +
                                  format_number(k1_max) + "]");
  for (double e : eps2)
    if (e < 0.0 || e > k2_max * (1.0 + 1e-9) + 1e-12)
      throw std::invalid_argument("run_sht_tradeoff: eps2 grid leaves the achievable range [0, " +
                                  format_number(k2_max) + "]");

  CsvTable table;
  table.add_meta("kind", cfg.kind);
  table.add_meta("model", detail::model_descriptor(cfg));
  table.add_meta("seed", std::to_string(cfg.seed));
  table.add_meta("k1_max", format_number(k1_max));
  table.add_meta("k2_max", format_number(k2_max));
  table.columns = {"eps1", "eps2", "value", "feasible", "time_ms"};

  struct Cell {
    std::string value = "error";
    std::string feasible = "0";
    double ms = 0.0;
  };
  std::vector<std::future<Cell>> jobs;
  for (double e1 : eps1)
    for (double e2 : eps2)
      jobs.push_back(std::async(std::launch::async, [&model, &channels, &i1, &i2, e1, e2] {
        Cell cell;
        const auto t0 = std::chrono::steady_clock::now();
        try {
          const MilpResult r = solve_sht_milp(model, channels, i1, i2, e1, e2);
          if (r.status == LpStatus::optimal) {
            cell.value = format_number(r.value);
            cell.feasible = "1";
          } else {
            cell.value = "infeasible";
          }
        } catch (const std::exception&) {
        }
        cell.ms = detail::elapsed_ms(t0);
        return cell;
      }));
  std::size_t job = 0;
  for (double e1 : eps1)
    for (double e2 : eps2) {
      Cell cell = jobs[job++].get();
      table.add_row({format_number(e1), format_number(e2), cell.value, cell.feasible,
                     format_number(cell.ms)});
    }
  return table;
}

// objective growth in the number of sensors, for either privacy metric; identical
// sensors get a least-squares slope in the header
inline CsvTable run_decentralized_scaling(const ExperimentConfig& cfg) {
  validate_experiment_config(cfg);
  const bool sht = cfg.kind == "decentralized-sht-scaling";
  std::vector<int> sensors = cfg.sensor_grid;
  if (sensors.empty()) sensors = {1, 2, 3, 4, 5, 6};

  CsvTable table;
  table.add_meta("kind", cfg.kind);
  table.add_meta("model", detail::model_descriptor(cfg));
  table.add_meta("seed", std::to_string(cfg.seed));
  table.add_meta("identical_sensors", cfg.identical_sensors ? "1" : "0");
  table.columns = {"sensors", "value", "feasible", "time_ms"};

  std::vector<DecentralizedModel> models;
  for (int num : sensors) models.push_back(detail::scaled_model(cfg, num));

  struct Cell {
    std::string value = "error";
    std::string feasible = "0";
    double ms = 0.0;
    double numeric = 0.0;
    bool ok = false;
  };
  std::vector<std::future<Cell>> jobs;
  for (const DecentralizedModel& dm : models)
    jobs.push_back(std::async(std::launch::async, [&cfg, &dm, sht] {
      Cell cell;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        if (sht) {
          const auto [i1, i2] = detail::index_sets(cfg, static_cast<int>(dm.prior.size()));
          std::vector<std::vector<Channel>> sets;
          for (const SignalModel& s : dm.sensors)
            sets.push_back(deterministic_channel_set(s.alphabet_size(), s.alphabet_size()));
          const double e1 = cfg.eps1_grid.empty() ? 0.5 * k1_metric(dm.sensors[0].post, i1)
                                                  : cfg.eps1_grid.front();
          const double e2 = cfg.eps2_grid.empty()
                                ? (i2.empty() ? 0.0 : 0.5 * k2_metric(dm.sensors[0].post, i1, i2))
                                : cfg.eps2_grid.front();
          const MilpResult r = solve_sht_milp(dm, sets, i1, i2, e1, e2);
          if (r.status == LpStatus::optimal) {
            cell.value = format_number(r.value);
            cell.feasible = "1";
            cell.numeric = r.value;
            cell.ok = true;
          } else {
            cell.value = "infeasible";
          }
        } else {
          const double eps = cfg.epsilon_grid.empty() ? 1.0 : cfg.epsilon_grid.front();
          const DecentralizedDesignResult r = local_exact_decentralized(dm, eps, cfg.exact);
          cell.value = format_number(r.value);
          cell.feasible = "1";
          cell.numeric = r.value;
          cell.ok = true;
        }
      } catch (const std::exception&) {
      }
      cell.ms = detail::elapsed_ms(t0);
      return cell;
    }));

  std::vector<double> ks, values;
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    Cell cell = jobs[i].get();
    if (cell.ok) {
      ks.push_back(sensors[i]);
      values.push_back(cell.numeric);
    }
    table.add_row({std::to_string(sensors[i]), cell.value, cell.feasible,
                   format_number(cell.ms)});
  }

  if (cfg.identical_sensors && ks.size() >= 2) {
    double kbar = 0.0, vbar = 0.0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      kbar += ks[i];
      vbar += values[i];
    }
    kbar /= static_cast<double>(ks.size());
    vbar /= static_cast<double>(ks.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      num += (ks[i] - kbar) * (values[i] - vbar);
      den += (ks[i] - kbar) * (ks[i] - kbar);
    }
    table.add_meta("linear_fit_slope", format_number(den > 0.0 ? num / den : 0.0));
  }
  return table;
}

// detection quality of a sanitizer: calibrated threshold, false-alarm rate, and
// worst-case delays per gamma
inline ExperimentOutput run_detect(const ExperimentConfig& cfg) {
  validate_experiment_config(cfg);
  const SignalModel model = detail::centralized_model(cfg);
  ChannelMixture mix;
  if (cfg.sanitizer_path.empty()) {
    mix = single_channel_mixture(identity_channel(model.alphabet_size()));
  } else {
    const json j = load_json_file(cfg.sanitizer_path);
    if (j.is_object() && j.contains("channels"))
      mix = mixture_from_json(j, cfg.sanitizer_path);
    else
      mix = single_channel_mixture(channel_from_json(j, cfg.sanitizer_path));
  }
  std::vector<double> gammas = cfg.gamma_grid;
  if (gammas.empty()) gammas = {10.0, 30.0, 100.0};

  CsvTable tradeoff;
  tradeoff.add_meta("kind", cfg.kind);
  tradeoff.add_meta("model", detail::model_descriptor(cfg));
  tradeoff.add_meta("seed", std::to_string(cfg.seed));
  tradeoff.add_meta("trials", std::to_string(cfg.trials));
  tradeoff.add_meta("sanitizer", cfg.sanitizer_path.empty() ? "identity" : cfg.sanitizer_path);
  tradeoff.columns = {"gamma",          "threshold_nats", "arl",   "arl_halfwidth",
                      "arl_censored",   "ewadd",          "ewadd_halfwidth", "time_ms"};

  CsvTable report;
  report.meta = tradeoff.meta;
  report.columns = {"gamma", "hypothesis", "wadd", "wadd_halfwidth", "wadd_censored"};

  struct Point {
    bool ok = false;
    double b = 0.0;
    MonteCarloEstimate arl;
    DetectionReport rep;
    double ms = 0.0;
  };
  std::vector<std::future<Point>> jobs;
  for (double gamma : gammas)
    jobs.push_back(std::async(std::launch::async, [&cfg, &model, &mix, gamma] {
      Point pt;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const long long calib_trials = std::max<long long>(500, cfg.trials / 10);
        pt.b = calibrate_threshold(model, mix, gamma, cfg.calibrate_tol,
                                   derive_seed(cfg.seed, 11), calib_trials, cfg.horizon_cap);
        pt.arl = estimate_arl(model, mix, pt.b, cfg.trials, cfg.horizon_cap,
                              derive_seed(cfg.seed, 12));
        pt.rep = estimate_ewadd(model, mix, pt.b, cfg.trials, derive_seed(cfg.seed, 13),
                                cfg.horizon_cap);
        pt.ok = true;
      } catch (const std::exception&) {
      }
      pt.ms = detail::elapsed_ms(t0);
      return pt;
    }));

  std::vector<double> lng, ewadds;
  for (std::size_t g = 0; g < gammas.size(); ++g) {
    const double gamma = gammas[g];
    const Point pt = jobs[g].get();
    if (pt.ok) {
      tradeoff.add_row({format_number(gamma), format_number(pt.b),
                        format_number(pt.arl.estimate), format_number(pt.arl.halfwidth),
                        std::to_string(pt.arl.censored), format_number(pt.rep.ewadd),
                        format_number(pt.rep.ewadd_halfwidth), format_number(pt.ms)});
      for (std::size_t i = 0; i < pt.rep.wadd.size(); ++i)
        report.add_row({format_number(gamma), std::to_string(i),
                        format_number(pt.rep.wadd[i].estimate),
                        format_number(pt.rep.wadd[i].halfwidth),
                        std::to_string(pt.rep.wadd[i].censored)});
      lng.push_back(std::log(gamma));
      ewadds.push_back(pt.rep.ewadd);
    } else {
      tradeoff.add_row({format_number(gamma), "error", "error", "error", "error", "error",
                        "error", format_number(pt.ms)});
    }
  }

  ExperimentOutput out;
  out.tables.emplace_back("detect_tradeoff.csv", std::move(tradeoff));
  out.tables.emplace_back("detect_report.csv", std::move(report));
  if (cfg.svg && lng.size() >= 2) {
    SvgSeries s;
    s.label = "ewadd";
    s.x = lng;
    s.y = ewadds;
    out.svgs.emplace_back("detect_tradeoff.svg",
                          svg_line_chart("worst-case delay vs ln gamma", "ln gamma", "EWADD", {s}));
  }
  return out;
}

inline ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
  validate_experiment_config(cfg);
  ExperimentOutput out;
  if (cfg.kind == "ml-tradeoff" || cfg.kind == "ml-timing") {
    CsvTable t = run_ml_tradeoff(cfg);
    if (cfg.svg) {
      SvgSeries exact_series, auglag_series;
      exact_series.label = "exact";
      auglag_series.label = "auglag";
      for (const auto& row : t.rows) {
        const double eps = std::strtod(row[0].c_str(), nullptr);
        char* end = nullptr;
        const double ev = std::strtod(row[1].c_str(), &end);
        if (end != row[1].c_str()) {
          exact_series.x.push_back(eps);
          exact_series.y.push_back(ev);
        }
        const double av = std::strtod(row[2].c_str(), &end);
        if (end != row[2].c_str()) {
          auglag_series.x.push_back(eps);
          auglag_series.y.push_back(av);
        }
      }
      out.svgs.emplace_back(
          "ml_tradeoff.svg",
          svg_line_chart("privacy budget vs detection payoff", "epsilon (bits)",
                         "expected KL (nats)", {exact_series, auglag_series}));
    }
    out.tables.emplace_back(cfg.kind == "ml-timing" ? "ml_timing.csv" : "ml_tradeoff.csv",
                            std::move(t));
  } else if (cfg.kind == "sht-tradeoff") {
    out.tables.emplace_back("sht_tradeoff.csv", run_sht_tradeoff(cfg));
  } else if (cfg.kind == "decentralized-ml-scaling" || cfg.kind == "decentralized-sht-scaling") {
    CsvTable t = run_decentralized_scaling(cfg);
    if (cfg.svg) {
      SvgSeries s;
      s.label = "value";
      for (const auto& row : t.rows) {
        if (row[2] != "1") continue;
        s.x.push_back(std::strtod(row[0].c_str(), nullptr));
        s.y.push_back(std::strtod(row[1].c_str(), nullptr));
      }
      out.svgs.emplace_back("decentralized_scaling.svg",
                            svg_line_chart("objective vs sensor count", "sensors",
                                           "objective (nats)", {s}));
    }
    out.tables.emplace_back("decentralized_scaling.csv", std::move(t));
  } else {
    out = run_detect(cfg);
  }
  return out;
}

}  // namespace pqcd
