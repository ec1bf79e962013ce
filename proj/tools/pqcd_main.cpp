#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pqcd/pqcd.hpp"

namespace fs = std::filesystem;

namespace {

struct ModelFlags {
  std::string model_path;
  std::vector<int> random_dims;  // alphabet size, post-change law count
  std::uint64_t seed = 1;
};

void add_model_flags(CLI::App* cmd, ModelFlags& mf) {
  CLI::Option* model = cmd->add_option("--model", mf.model_path, "model JSON file");
  CLI::Option* random =
      cmd->add_option("--random", mf.random_dims,
                      "random instance: alphabet size and number of post-change laws")
          ->expected(2);
  cmd->add_option("--seed", mf.seed, "RNG seed for random instances and simulations");
  model->excludes(random);
  random->excludes(model);
}

pqcd::json model_json(const ModelFlags& mf) {
  if (mf.model_path.empty())
    throw std::runtime_error("need --model FILE or --random N_X N_G");
  return pqcd::load_json_file(mf.model_path);
}

pqcd::SignalModel centralized_model(const ModelFlags& mf) {
  if (!mf.model_path.empty()) {
    const pqcd::json j = model_json(mf);
    if (pqcd::json_is_decentralized(j))
      throw std::runtime_error(mf.model_path + " is decentralized; this command needs a "
                               "centralized model");
    return pqcd::signal_model_from_json(j, mf.model_path);
  }
  if (mf.random_dims.size() == 2)
    return pqcd::random_instance(mf.random_dims[0], mf.random_dims[1], mf.seed);
  throw std::runtime_error("need --model FILE or --random N_X N_G");
}

std::string out_path(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  return (fs::path(dir) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

pqcd::ChannelMixture load_sanitizer(const std::string& path, int alphabet) {
  if (path.empty()) return pqcd::single_channel_mixture(pqcd::identity_channel(alphabet));
  const pqcd::json j = pqcd::load_json_file(path);
  if (j.is_object() && j.contains("channels") && j.contains("weights"))
    return pqcd::mixture_from_json(j, path);
  if (j.is_object() && j.contains("channel"))
    return pqcd::single_channel_mixture(pqcd::channel_from_json(j.at("channel"), path));
  return pqcd::single_channel_mixture(pqcd::channel_from_json(j, path));
}

std::vector<int> default_i1(const std::vector<int>& i1) {
  return i1.empty() ? std::vector<int>{0, 1} : i1;
}

std::vector<int> default_i2(const std::vector<int>& i1, const std::vector<int>& i2,
                            int num_post) {
  if (!i2.empty() || i1.empty()) return i2;
  std::vector<int> rest;
  for (int i = 2; i < num_post; ++i) rest.push_back(i);
  return rest;
}

int run_design_ml_exact(const ModelFlags& mf, double epsilon, const pqcd::ExactOptions& opts,
                        const std::string& out_dir) {
  const pqcd::SignalModel m = centralized_model(mf);
  const pqcd::DesignResult r = pqcd::exact_design_ml(m, epsilon, opts);
  pqcd::save_json_file(out_path(out_dir, "design_ml_exact.json"),
                       pqcd::design_result_to_json(r));
  pqcd::save_json_file(out_path(out_dir, "sanitizer.json"),
                       pqcd::mixture_to_json(pqcd::single_channel_mixture(r.channel)));
  std::cout << "value " << pqcd::format_number(r.value) << " nats, blocks "
            << r.partition.num_blocks() << "/" << r.max_blocks << ", partitions examined "
            << r.stats.partitions_examined << (r.approximate ? " (truncated)" : "") << "\n"
            << "wrote " << out_path(out_dir, "design_ml_exact.json") << "\n";
  return 0;
}

int run_design_ml_auglag(const ModelFlags& mf, double epsilon, const pqcd::SmoothParams& params,
                         int restarts, const std::string& out_dir) {
  const pqcd::SignalModel m = centralized_model(mf);
  pqcd::AuglagDiagnostics diag;
  const pqcd::DesignResult r =
      pqcd::auglag_design_ml(m, epsilon, params, restarts, mf.seed, &diag);
  pqcd::save_json_file(out_path(out_dir, "design_ml_auglag.json"),
                       pqcd::design_result_to_json(r));
  pqcd::save_json_file(out_path(out_dir, "sanitizer.json"),
                       pqcd::mixture_to_json(pqcd::single_channel_mixture(r.channel)));

  pqcd::CsvTable trace;
  trace.add_meta("seed", std::to_string(mf.seed));
  trace.add_meta("best_restart", std::to_string(diag.best_restart));
  trace.columns = {"outer", "rho", "lambda", "objective", "count", "violation"};
  for (const pqcd::AuglagTraceRow& row : diag.trace)
    trace.add_row({std::to_string(row.outer), pqcd::format_number(row.rho),
                   pqcd::format_number(row.lambda), pqcd::format_number(row.objective),
                   pqcd::format_number(row.count), pqcd::format_number(row.violation)});
  trace.save(out_path(out_dir, "auglag_trace.csv"));

  std::cout << "value " << pqcd::format_number(r.value) << " nats (restart "
            << diag.best_restart << ", smoothed objective "
            << pqcd::format_number(diag.smooth_objective) << ")\n"
            << "wrote " << out_path(out_dir, "design_ml_auglag.json") << "\n";
  return 0;
}

int run_design_sht_milp(const ModelFlags& mf, double eps1, double eps2, std::vector<int> i1,
                        std::vector<int> i2, long long node_limit, bool lp_export,
                        const std::string& out_dir) {
  pqcd::DecentralizedModel dm;
  bool loaded = false;
  if (!mf.model_path.empty()) {
    const pqcd::json j = model_json(mf);
    if (pqcd::json_is_decentralized(j)) {
      dm = pqcd::decentralized_model_from_json(j, mf.model_path);
      loaded = true;
    }
  }
  if (!loaded) {
    dm.sensors = {centralized_model(mf)};
    dm.prior = dm.sensors[0].prior;
  }
  i1 = default_i1(i1);
  i2 = default_i2(i1, i2, static_cast<int>(dm.prior.size()));

  std::vector<std::vector<pqcd::Channel>> sets;
  for (const pqcd::SignalModel& s : dm.sensors)
    sets.push_back(pqcd::deterministic_channel_set(s.alphabet_size(), s.alphabet_size()));

  if (lp_export) {
    const pqcd::MilpProblem p = pqcd::build_milp_sht(dm, sets, i1, i2, eps1, eps2);
    write_text(out_path(out_dir, "sht_model.lp"), pqcd::export_milp_lp_format(p));
  }

  const pqcd::MilpResult r = pqcd::solve_sht_milp(dm, sets, i1, i2, eps1, eps2, node_limit);
  pqcd::save_json_file(out_path(out_dir, "design_sht_milp.json"),
                       pqcd::milp_result_to_json(r));
  if (r.status == pqcd::LpStatus::optimal) {
    for (std::size_t k = 0; k < sets.size(); ++k) {
      pqcd::ChannelMixture mix;
      mix.channels = sets[k];
      mix.weights = r.phi[k];
      const std::string name =
          sets.size() == 1 ? "sanitizer.json" : "sanitizer_" + std::to_string(k) + ".json";
      pqcd::save_json_file(out_path(out_dir, name), pqcd::mixture_to_json(mix));
    }
    std::cout << "value " << pqcd::format_number(r.value) << " nats, nodes "
              << r.nodes_explored << "\n";
  } else {
    std::cout << "no feasible channel distribution under eps1="
              << pqcd::format_number(eps1) << ", eps2=" << pqcd::format_number(eps2) << "\n";
  }
  std::cout << "wrote " << out_path(out_dir, "design_sht_milp.json") << "\n";
  return r.status == pqcd::LpStatus::optimal ? 0 : 2;
}

int run_design_decentralized(const ModelFlags& mf, double epsilon, int sensors, bool identical,
                             const pqcd::ExactOptions& opts, const std::string& out_dir) {
  pqcd::DecentralizedModel dm;
  if (!mf.model_path.empty()) {
    const pqcd::json j = model_json(mf);
    if (pqcd::json_is_decentralized(j)) {
      dm = pqcd::decentralized_model_from_json(j, mf.model_path);
    } else {
      const pqcd::SignalModel base = pqcd::signal_model_from_json(j, mf.model_path);
      dm.prior = base.prior;
      dm.sensors.assign(static_cast<std::size_t>(sensors), base);
    }
  } else if (mf.random_dims.size() == 2) {
    dm = pqcd::random_decentralized_instance(mf.random_dims[0], mf.random_dims[1], sensors,
                                             identical, mf.seed);
  } else {
    throw std::runtime_error("need --model FILE or --random N_X N_G");
  }

  const pqcd::DecentralizedDesignResult r = pqcd::local_exact_decentralized(dm, epsilon, opts);
  pqcd::save_json_file(out_path(out_dir, "design_decentralized.json"),
                       pqcd::decentralized_design_result_to_json(r));
  for (std::size_t k = 0; k < r.channels.size(); ++k)
    pqcd::save_json_file(
        out_path(out_dir, "sanitizer_" + std::to_string(k) + ".json"),
        pqcd::mixture_to_json(pqcd::single_channel_mixture(r.channels[k])));
  std::cout << "total value " << pqcd::format_number(r.value) << " nats across "
            << r.channels.size() << " sensors\n"
            << "wrote " << out_path(out_dir, "design_decentralized.json") << "\n";
  return 0;
}

int run_simulate(const ModelFlags& mf, const std::string& sanitizer_path, double threshold,
                 double gamma, double calibrate_tol, long long trials, long long horizon_cap,
                 const std::string& out_dir) {
  const pqcd::SignalModel m = centralized_model(mf);
  const pqcd::ChannelMixture mix = load_sanitizer(sanitizer_path, m.alphabet_size());

  double b = threshold;
  if (gamma > 0.0)
    b = pqcd::calibrate_threshold(m, mix, gamma, calibrate_tol,
                                  pqcd::derive_seed(mf.seed, 11),
                                  std::max<long long>(500, trials / 10), horizon_cap);
  if (b <= 0.0) throw std::runtime_error("need --threshold B > 0 or --gamma G > 1");

  const pqcd::MonteCarloEstimate arl =
      pqcd::estimate_arl(m, mix, b, trials, horizon_cap, pqcd::derive_seed(mf.seed, 12));
  pqcd::DetectionReport rep =
      pqcd::estimate_ewadd(m, mix, b, trials, pqcd::derive_seed(mf.seed, 13), horizon_cap);
  rep.arl_estimate = arl.estimate;
  rep.arl_halfwidth = arl.halfwidth;
  rep.arl_censored = arl.censored;

  pqcd::json wadd = pqcd::json::array();
  for (const pqcd::MonteCarloEstimate& w : rep.wadd)
    wadd.push_back(pqcd::json{{"estimate", w.estimate},
                              {"halfwidth", w.halfwidth},
                              {"censored", w.censored}});
  pqcd::save_json_file(out_path(out_dir, "simulate_report.json"),
                       pqcd::json{{"threshold_nats", b},
                                  {"arl", arl.estimate},
                                  {"arl_halfwidth", arl.halfwidth},
                                  {"arl_censored", arl.censored},
                                  {"ewadd", rep.ewadd},
                                  {"ewadd_halfwidth", rep.ewadd_halfwidth},
                                  {"wadd", std::move(wadd)},
                                  {"trials", trials},
                                  {"horizon_cap", horizon_cap},
                                  {"seed", mf.seed}});
  std::cout << "threshold " << pqcd::format_number(b) << " nats\n"
            << "ARL " << pqcd::format_number(arl.estimate) << " +/- "
            << pqcd::format_number(arl.halfwidth) << " (censored " << arl.censored << ")\n"
            << "EWADD " << pqcd::format_number(rep.ewadd) << " +/- "
            << pqcd::format_number(rep.ewadd_halfwidth) << "\n"
            << "wrote " << out_path(out_dir, "simulate_report.json") << "\n";
  return 0;
}

int run_tradeoff(const pqcd::ExperimentConfig& cfg, const std::string& out_dir) {
  const pqcd::ExperimentOutput out = pqcd::run_experiment(cfg);
  for (const auto& [name, table] : out.tables) {
    table.save(out_path(out_dir, name));
    std::cout << "wrote " << out_path(out_dir, name) << "\n";
  }
  for (const auto& [name, svg] : out.svgs) {
    write_text(out_path(out_dir, name), svg);
    std::cout << "wrote " << out_path(out_dir, name) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sanitization channel design and GLR CuSum evaluation for privacy-aware "
               "quickest change detection"};
  app.require_subcommand(1);

  ModelFlags mf;
  std::string out_dir = ".";
  pqcd::ExactOptions exact_opts;
  double epsilon = 1.0;

  CLI::App* exact = app.add_subcommand(
      "design-ml-exact", "exact maximal-leakage design by partition and vertex enumeration");
  add_model_flags(exact, mf);
  exact->add_option("--epsilon", epsilon, "leakage budget in bits")->required();
  exact->add_option("--vertex-cap", exact_opts.vertex_cap, "vertex enumeration cap");
  exact->add_option("--base-cap", exact_opts.base_cap, "basis enumeration cap");
  exact->add_option("--out-size", exact_opts.out_size, "sanitized alphabet size (default input)");
  exact->add_option("--out", out_dir, "output directory");

  pqcd::SmoothParams smooth;
  int restarts = 10;
  CLI::App* auglag = app.add_subcommand(
      "design-ml-auglag", "smoothed augmented-Lagrangian maximal-leakage design");
  add_model_flags(auglag, mf);
  auglag->add_option("--epsilon", epsilon, "leakage budget in bits")->required();
  auglag->add_option("--restarts", restarts, "random restarts");
  auglag->add_option("--smooth-k", smooth.k, "arctan gate sharpness");
  auglag->add_option("--smooth-tau", smooth.tau, "smoothed L1 curvature");
  auglag->add_option("--outer-iters", smooth.outer_iters, "multiplier updates");
  auglag->add_option("--inner-iters", smooth.inner_iters, "ascent steps per multiplier update");
  auglag->add_option("--out-size", smooth.out_size, "sanitized alphabet size (default input)");
  auglag->add_option("--out", out_dir, "output directory");

  double eps1 = 0.0, eps2 = 0.0;
  std::vector<int> i1, i2;
  long long node_limit = pqcd::kDefaultNodeLimit;
  bool lp_export = false;
  CLI::App* sht = app.add_subcommand(
      "design-sht-milp", "channel-distribution design under sequential-test privacy, by MILP");
  add_model_flags(sht, mf);
  sht->add_option("--eps1", eps1, "privacy ceiling on the protected set, nats")->required();
  sht->add_option("--eps2", eps2, "distinguishability floor on the public set, nats");
  sht->add_option("--i1", i1, "protected hypothesis indices (default 0 1)");
  sht->add_option("--i2", i2, "public hypothesis indices (default the rest)");
  sht->add_option("--node-limit", node_limit, "branch-and-bound node cap");
  sht->add_flag("--lp-export", lp_export, "also write the model in LP format");
  sht->add_option("--out", out_dir, "output directory");

  int sensors = 2;
  bool identical = false;
  CLI::App* dec = app.add_subcommand(
      "design-decentralized", "per-sensor exact maximal-leakage design on a common partition");
  add_model_flags(dec, mf);
  dec->add_option("--epsilon", epsilon, "leakage budget in bits")->required();
  dec->add_option("--sensors", sensors, "sensor count for replicated or random models");
  dec->add_flag("--identical-sensors", identical, "draw one random sensor and replicate it");
  dec->add_option("--vertex-cap", exact_opts.vertex_cap, "vertex enumeration cap");
  dec->add_option("--base-cap", exact_opts.base_cap, "basis enumeration cap");
  dec->add_option("--out", out_dir, "output directory");

  std::string sanitizer_path;
  double threshold = 0.0, gamma = 0.0, calibrate_tol = 0.25;
  long long trials = 10000, horizon_cap = pqcd::kDefaultHorizonCap;
  CLI::App* sim = app.add_subcommand(
      "simulate", "GLR CuSum Monte Carlo: false-alarm rate and detection delays");
  add_model_flags(sim, mf);
  sim->add_option("--sanitizer", sanitizer_path, "channel or mixture JSON (default identity)");
  sim->add_option("--threshold", threshold, "stopping threshold in nats");
  sim->add_option("--gamma", gamma, "target ARL; calibrates the threshold when given");
  sim->add_option("--calibrate-tol", calibrate_tol, "relative calibration tolerance");
  sim->add_option("--trials", trials, "Monte Carlo trials");
  sim->add_option("--horizon-cap", horizon_cap, "per-trial step cap");
  sim->add_option("--out", out_dir, "output directory");

  std::string config_path, kind;
  std::vector<double> epsilon_grid, eps1_grid, eps2_grid, gamma_grid;
  std::vector<int> sensor_grid;
  bool svg = false;
  CLI::App* tr = app.add_subcommand("tradeoff", "batch experiment runner emitting CSV and SVG");
  add_model_flags(tr, mf);
  tr->add_option("--config", config_path, "experiment config JSON; flags override nothing here");
  tr->add_option("--kind", kind,
                 "ml-tradeoff | ml-timing | sht-tradeoff | decentralized-ml-scaling | "
                 "decentralized-sht-scaling | detect");
  tr->add_option("--epsilon", epsilon_grid, "leakage budgets in bits");
  tr->add_option("--eps1", eps1_grid, "privacy ceilings in nats");
  tr->add_option("--eps2", eps2_grid, "distinguishability floors in nats");
  tr->add_option("--i1", i1, "protected hypothesis indices");
  tr->add_option("--i2", i2, "public hypothesis indices");
  tr->add_option("--sensors", sensor_grid, "sensor counts");
  tr->add_flag("--identical-sensors", identical, "replicate one sensor across the grid");
  tr->add_option("--trials", trials, "Monte Carlo trials");
  tr->add_option("--gamma", gamma_grid, "target ARLs for detect runs");
  tr->add_option("--sanitizer", sanitizer_path, "sanitizer JSON for detect runs");
  tr->add_flag("--svg", svg, "also emit SVG charts");
  tr->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (exact->parsed()) return run_design_ml_exact(mf, epsilon, exact_opts, out_dir);
    if (auglag->parsed()) return run_design_ml_auglag(mf, epsilon, smooth, restarts, out_dir);
    if (sht->parsed())
      return run_design_sht_milp(mf, eps1, eps2, i1, i2, node_limit, lp_export, out_dir);
    if (dec->parsed())
      return run_design_decentralized(mf, epsilon, sensors, identical, exact_opts, out_dir);
    if (sim->parsed())
      return run_simulate(mf, sanitizer_path, threshold, gamma, calibrate_tol, trials,
                          horizon_cap, out_dir);
    if (tr->parsed()) {
      pqcd::ExperimentConfig cfg;
      if (!config_path.empty()) {
        cfg = pqcd::experiment_config_from_json(pqcd::load_json_file(config_path));
      } else {
        cfg.kind = kind;
        cfg.model_path = mf.model_path;
        if (mf.random_dims.size() == 2) {
          cfg.random_model = true;
          cfg.random_alphabet = mf.random_dims[0];
          cfg.random_num_post = mf.random_dims[1];
        }
        cfg.seed = mf.seed;
        cfg.epsilon_grid = epsilon_grid;
        cfg.eps1_grid = eps1_grid;
        cfg.eps2_grid = eps2_grid;
        cfg.i1 = i1;
        cfg.i2 = i2;
        cfg.sensor_grid = sensor_grid;
        cfg.identical_sensors = identical;
        cfg.trials = trials;
        cfg.gamma_grid = gamma_grid;
        cfg.calibrate_tol = calibrate_tol;
        cfg.horizon_cap = horizon_cap;
        cfg.sanitizer_path = sanitizer_path;
        cfg.svg = svg;
        pqcd::validate_experiment_config(cfg);
      }
      return run_tradeoff(cfg, out_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
