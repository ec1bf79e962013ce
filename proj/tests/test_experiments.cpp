#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "pqcd/experiments.hpp"

namespace {

using nlohmann::json;
using pqcd::CsvTable;
using pqcd::ExperimentConfig;
using pqcd::ExperimentOutput;
using pqcd::SignalModel;

std::filesystem::path temp_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "pqcd_experiments_test";
  std::filesystem::create_directories(dir);
  return dir;
}

ExperimentConfig fast_ml_config() {
  ExperimentConfig cfg;
  cfg.kind = "ml-tradeoff";
  cfg.random_model = true;
  cfg.random_alphabet = 3;
  cfg.random_num_post = 3;
  cfg.seed = 5;
  cfg.epsilon_grid = {0.0, 1.0, std::log2(3.0)};
  cfg.auglag_restarts = 2;
  cfg.smooth.outer_iters = 4;
  cfg.smooth.inner_iters = 80;
  return cfg;
}

double cell_number(const CsvTable& t, std::size_t row, std::size_t col) {
  char* end = nullptr;
  const std::string& cell = t.rows.at(row).at(col);
  const double v = std::strtod(cell.c_str(), &end);
  EXPECT_NE(end, cell.c_str()) << "cell (" << row << "," << col << ") = '" << cell << "'";
  return v;
}

std::string meta_value(const CsvTable& t, const std::string& key) {
  for (const auto& [k, v] : t.meta)
    if (k == key) return v;
  ADD_FAILURE() << "missing meta key " << key;
  return "";
}

TEST(Experiments, ConfigValidationRejectsNonsense) {
  ExperimentConfig cfg;
  cfg.kind = "unknown";
  cfg.random_model = true;
  EXPECT_THROW(pqcd::validate_experiment_config(cfg), std::invalid_argument);
  cfg.kind = "ml-tradeoff";
  cfg.random_model = false;
  EXPECT_THROW(pqcd::validate_experiment_config(cfg), std::invalid_argument);
  cfg.random_model = true;
  cfg.trials = 0;
  EXPECT_THROW(pqcd::validate_experiment_config(cfg), std::invalid_argument);
  cfg.trials = 100;
  cfg.random_alphabet = 1;
  EXPECT_THROW(pqcd::validate_experiment_config(cfg), std::invalid_argument);
}

TEST(Experiments, ConfigFromJsonFillsDefaultsAndNestedBlocks) {
  const json j{{"kind", "ml-tradeoff"},
               {"random_model", true},
               {"smooth", json{{"inner_iters", 42}}},
               {"exact", json{{"vertex_cap", 123}}}};
  const ExperimentConfig cfg = pqcd::experiment_config_from_json(j);
  EXPECT_EQ(cfg.seed, 1u);
  EXPECT_EQ(cfg.trials, 10000);
  EXPECT_EQ(cfg.random_alphabet, 3);
  EXPECT_EQ(cfg.smooth.inner_iters, 42);
  EXPECT_EQ(cfg.smooth.outer_iters, 8);
  EXPECT_EQ(cfg.exact.vertex_cap, 123);
  EXPECT_FALSE(cfg.svg);
  EXPECT_THROW(pqcd::experiment_config_from_json(json{{"kind", "bogus"}}),
               std::invalid_argument);
}

TEST(Experiments, MlTradeoffGrowsWithTheBudgetAndBoundsTheLocalSolver) {
  const CsvTable t = pqcd::run_ml_tradeoff(fast_ml_config());
  const std::vector<std::string> expected = {"epsilon_bits", "exact_value", "auglag_value",
                                             "exact_ms", "auglag_ms"};
  EXPECT_EQ(t.columns, expected);
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(meta_value(t, "alphabet"), "3");
  EXPECT_EQ(meta_value(t, "num_post"), "3");

  double previous = -1.0;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double exact = cell_number(t, r, 1);
    const double local = cell_number(t, r, 2);
    EXPECT_GE(exact, previous - 1e-12);
    EXPECT_LE(local, exact + 1e-6);
    previous = exact;
  }
}

TEST(Experiments, MlTradeoffRerunsAreByteIdenticalWithoutTimings) {
  const CsvTable a = pqcd::run_ml_tradeoff(fast_ml_config());
  const CsvTable b = pqcd::run_ml_tradeoff(fast_ml_config());
  EXPECT_EQ(pqcd::strip_timing_columns(a).to_string(), pqcd::strip_timing_columns(b).to_string());
}

TEST(Experiments, ShtTradeoffCoversTheGridInOrder) {
  ExperimentConfig cfg;
  cfg.kind = "sht-tradeoff";
  cfg.random_model = true;
  cfg.random_alphabet = 3;
  cfg.random_num_post = 3;
  cfg.seed = 7;
  const CsvTable t = pqcd::run_sht_tradeoff(cfg);
  const std::vector<std::string> expected = {"eps1", "eps2", "value", "feasible", "time_ms"};
  EXPECT_EQ(t.columns, expected);
  ASSERT_EQ(t.rows.size(), 20u);  // default 5 x 4 grid

  // rows iterate eps2 fastest; for a fixed eps2 the value grows with eps1
  for (std::size_t j = 0; j < 4; ++j) {
    double previous = -1.0;
    bool previous_feasible = false;
    for (std::size_t i = 0; i < 5; ++i) {
      const std::size_t row = i * 4 + j;
      if (t.rows[row][3] != "1") {
        previous_feasible = false;
        continue;
      }
      const double value = cell_number(t, row, 2);
      if (previous_feasible) EXPECT_GE(value, previous - 1e-7);
      previous = value;
      previous_feasible = true;
    }
  }
  // the full-budget corner is always feasible
  EXPECT_EQ(t.rows[16][3], "1");
}

TEST(Experiments, MlScalingIsLinearForIdenticalSensors) {
  ExperimentConfig cfg;
  cfg.kind = "decentralized-ml-scaling";
  cfg.random_model = true;
  cfg.random_alphabet = 3;
  cfg.random_num_post = 2;
  cfg.seed = 11;
  cfg.identical_sensors = true;
  cfg.sensor_grid = {1, 2, 3};
  cfg.epsilon_grid = {1.0};
  const CsvTable t = pqcd::run_decentralized_scaling(cfg);
  ASSERT_EQ(t.rows.size(), 3u);
  const double v1 = cell_number(t, 0, 1);
  ASSERT_GT(v1, 0.0);
  EXPECT_NEAR(cell_number(t, 1, 1), 2.0 * v1, 1e-9);
  EXPECT_NEAR(cell_number(t, 2, 1), 3.0 * v1, 1e-9);
  EXPECT_NEAR(std::strtod(meta_value(t, "linear_fit_slope").c_str(), nullptr), v1, 1e-9);
}

TEST(Experiments, ShtScalingDoublesWhenConstraintsAreSlack) {
  ExperimentConfig cfg;
  cfg.kind = "decentralized-sht-scaling";
  cfg.random_model = true;
  cfg.random_alphabet = 3;
  cfg.random_num_post = 3;
  cfg.seed = 13;
  cfg.identical_sensors = true;
  cfg.sensor_grid = {1, 2};
  cfg.eps1_grid = {1e6};
  cfg.eps2_grid = {0.0};
  const CsvTable t = pqcd::run_decentralized_scaling(cfg);
  ASSERT_EQ(t.rows.size(), 2u);
  ASSERT_EQ(t.rows[0][2], "1");
  ASSERT_EQ(t.rows[1][2], "1");
  const double v1 = cell_number(t, 0, 1);
  EXPECT_GT(v1, 0.0);
  EXPECT_NEAR(cell_number(t, 1, 1), 2.0 * v1, 1e-6);
}

TEST(Experiments, DetectProducesOneRowPerGammaAndHypothesis) {
  ExperimentConfig cfg;
  cfg.kind = "detect";
  cfg.random_model = true;
  cfg.random_alphabet = 3;
  cfg.random_num_post = 2;
  cfg.seed = 17;
  cfg.trials = 300;
  cfg.gamma_grid = {5.0};
  cfg.calibrate_tol = 0.02;
  const ExperimentOutput out = pqcd::run_experiment(cfg);
  ASSERT_EQ(out.tables.size(), 2u);
  EXPECT_EQ(out.tables[0].first, "detect_tradeoff.csv");
  EXPECT_EQ(out.tables[1].first, "detect_report.csv");

  const CsvTable& tradeoff = out.tables[0].second;
  ASSERT_EQ(tradeoff.rows.size(), 1u);
  const double arl = cell_number(tradeoff, 0, 2);
  EXPECT_GE(arl, 5.0);
  EXPECT_LE(arl, 6.0);
  EXPECT_GT(cell_number(tradeoff, 0, 5), 0.0);

  const CsvTable& report = out.tables[1].second;
  ASSERT_EQ(report.rows.size(), 2u);
  EXPECT_EQ(report.rows[0][1], "0");
  EXPECT_EQ(report.rows[1][1], "1");
}

TEST(Experiments, DetectRerunsAreByteIdenticalWithoutTimings) {
  ExperimentConfig cfg;
  cfg.kind = "detect";
  cfg.random_model = true;
  cfg.random_alphabet = 3;
  cfg.random_num_post = 2;
  cfg.seed = 17;
  cfg.trials = 200;
  cfg.gamma_grid = {5.0};
  cfg.calibrate_tol = 0.02;
  const ExperimentOutput a = pqcd::run_experiment(cfg);
  const ExperimentOutput b = pqcd::run_experiment(cfg);
  ASSERT_EQ(a.tables.size(), b.tables.size());
  for (std::size_t i = 0; i < a.tables.size(); ++i)
    EXPECT_EQ(pqcd::strip_timing_columns(a.tables[i].second).to_string(),
              pqcd::strip_timing_columns(b.tables[i].second).to_string());
}

TEST(Experiments, SanitizationShowsUpAsExtraDelay) {
  SignalModel m;
  m.pre = pqcd::make_pmf({0.25, 0.25, 0.25, 0.25});
  m.post = {pqcd::make_pmf({0.85, 0.05, 0.05, 0.05}),
            pqcd::make_pmf({0.05, 0.85, 0.05, 0.05}),
            pqcd::make_pmf({0.05, 0.05, 0.85, 0.05})};
  m.prior = pqcd::uniform_pmf(3);
  const auto dir = temp_dir();
  const std::string model_path = (dir / "separated_model.json").string();
  pqcd::save_json_file(model_path, pqcd::signal_model_to_json(m));

  const pqcd::DesignResult design = pqcd::exact_design_ml(m, 1.0);
  ASSERT_EQ(design.partition.num_blocks, 2);
  const std::string sanitizer_path = (dir / "merge_sanitizer.json").string();
  pqcd::save_json_file(sanitizer_path, pqcd::channel_to_json(design.channel));

  ExperimentConfig cfg;
  cfg.kind = "detect";
  cfg.model_path = model_path;
  cfg.seed = 19;
  cfg.trials = 1500;
  cfg.gamma_grid = {10.0};
  cfg.calibrate_tol = 0.02;
  const ExperimentOutput plain = pqcd::run_experiment(cfg);
  cfg.sanitizer_path = sanitizer_path;
  const ExperimentOutput sanitized = pqcd::run_experiment(cfg);

  const double ewadd_plain = cell_number(plain.tables[0].second, 0, 5);
  const double ewadd_sanitized = cell_number(sanitized.tables[0].second, 0, 5);
  EXPECT_GT(ewadd_sanitized, ewadd_plain);
  EXPECT_EQ(meta_value(sanitized.tables[0].second, "sanitizer"), sanitizer_path);
}

TEST(Experiments, DelayGrowsLikeLogGammaOverDivergence) {
  SignalModel m;
  m.pre = pqcd::make_pmf({0.6, 0.25, 0.15});
  m.post = {pqcd::make_pmf({0.2, 0.45, 0.35})};
  m.prior = pqcd::uniform_pmf(1);
  double kl = 0.0;
  for (int y = 0; y < 3; ++y) kl += m.post[0][y] * std::log(m.post[0][y] / m.pre[y]);
  ASSERT_GT(kl, 0.3);

  const auto dir = temp_dir();
  const std::string model_path = (dir / "ternary_model.json").string();
  pqcd::save_json_file(model_path, pqcd::signal_model_to_json(m));

  ExperimentConfig cfg;
  cfg.kind = "detect";
  cfg.model_path = model_path;
  cfg.seed = 29;
  cfg.trials = 2000;
  cfg.gamma_grid = {20.0, 400.0};
  cfg.calibrate_tol = 0.02;
  const ExperimentOutput out = pqcd::run_experiment(cfg);
  const CsvTable& tradeoff = out.tables[0].second;
  ASSERT_EQ(tradeoff.rows.size(), 2u);
  ASSERT_EQ(out.tables[1].second.rows.size(), 2u);

  const double e1 = cell_number(tradeoff, 0, 5);
  const double e2 = cell_number(tradeoff, 1, 5);
  const double slope = (e2 - e1) / (std::log(400.0) - std::log(20.0));
  EXPECT_NEAR(slope * kl, 1.0, 0.25);
}

TEST(Experiments, SvgChartsComeOutWhenAskedFor) {
  ExperimentConfig cfg = fast_ml_config();
  cfg.svg = true;
  const ExperimentOutput out = pqcd::run_experiment(cfg);
  ASSERT_EQ(out.svgs.size(), 1u);
  EXPECT_EQ(out.svgs[0].first, "ml_tradeoff.svg");
  EXPECT_NE(out.svgs[0].second.find("<polyline"), std::string::npos);
  EXPECT_NE(out.svgs[0].second.find("<svg"), std::string::npos);
}

TEST(Experiments, CentralizedKindsRejectDecentralizedModelFiles) {
  const auto dir = temp_dir();
  const std::string path = (dir / "decentralized.json").string();
  pqcd::save_json_file(path,
                       pqcd::decentralized_model_to_json(
                           pqcd::random_decentralized_instance(3, 2, 2, true, 23)));
  ExperimentConfig cfg;
  cfg.kind = "ml-tradeoff";
  cfg.model_path = path;
  EXPECT_THROW(pqcd::run_ml_tradeoff(cfg), std::invalid_argument);
}

TEST(Experiments, ShtKindsNeedTwoPostChangeLaws) {
  ExperimentConfig cfg;
  cfg.kind = "sht-tradeoff";
  cfg.random_model = true;
  cfg.random_alphabet = 3;
  cfg.random_num_post = 1;
  EXPECT_THROW(pqcd::run_sht_tradeoff(cfg), std::invalid_argument);
}

TEST(Experiments, CsvRoundTripAndTimingStrip) {
  CsvTable t;
  t.add_meta("kind", "demo");
  t.columns = {"x", "value", "time_ms"};
  t.add_row({"1", "2.5", "10.2"});
  t.add_row({"2", "3.5", "11.9"});
  const CsvTable back = pqcd::parse_csv(t.to_string());
  ASSERT_EQ(back.rows.size(), 2u);
  EXPECT_EQ(back.columns, t.columns);
  EXPECT_EQ(back.rows[1][1], "3.5");
  EXPECT_EQ(back.meta[0].first, "kind");
  EXPECT_EQ(back.meta[0].second, "demo");

  const CsvTable stripped = pqcd::strip_timing_columns(t);
  const std::vector<std::string> expected = {"x", "value"};
  EXPECT_EQ(stripped.columns, expected);
  EXPECT_EQ(stripped.rows[0].size(), 2u);
  EXPECT_EQ(pqcd::format_number(0.1 + 0.2), "0.3");
  EXPECT_EQ(pqcd::format_number(123456.789), "123456.789");
}

}  // namespace
