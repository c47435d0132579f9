#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "support.hpp"
#include "winf/error.hpp"
#include "winf/experiments.hpp"
#include "winf/sampling.hpp"

using namespace winf;
using testing::evaluator;

namespace {

ExperimentConfig config_from(const std::string& text) {
  return parse_config(nlohmann::json::parse(text), WINF_MODELS_DIR);
}

}  // namespace

TEST_CASE("fit recovers exact power laws") {
  for (double exponent : {0.25, 0.5, 1.0 / 6.0}) {
    std::vector<std::pair<std::size_t, double>> pts;
    for (std::size_t n = 128; n <= 131072; n *= 2) {
      const double nn = static_cast<double>(n);
      pts.emplace_back(n, 0.7 * std::pow(std::log(nn) / nn, exponent));
    }
    const auto fit = fit_rate(pts, 1);
    CHECK(std::abs(fit.slope + exponent) <= 1e-12);
    CHECK(std::abs(fit.intercept - std::log(0.7)) <= 1e-10);
    CHECK(fit.residual_se <= 1e-12);
    CHECK(fit.points == pts.size());
    CHECK(fit.predicted_exponent == -0.25);
  }
}

TEST_CASE("pinned fit returns the constant") {
  std::vector<std::pair<std::size_t, double>> pts;
  for (std::size_t n = 100; n <= 100000; n *= 10) {
    const double nn = static_cast<double>(n);
    pts.emplace_back(n, 3.0 * std::pow(std::log(nn) / nn, 1.0 / 6.0));
  }
  const auto fit = fit_rate(pts, 2);
  CHECK(fit.predicted_exponent == doctest::Approx(-1.0 / 6.0));
  CHECK(fit.fitted_constant == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("fit preconditions") {
  std::vector<std::pair<std::size_t, double>> three{{10, 0.1}, {100, 0.05}, {1000, 0.01}};
  CHECK_THROWS_AS(fit_rate(three), domain_error);
  std::vector<std::pair<std::size_t, double>> zero{{10, 0.1}, {100, 0.05}, {1000, 0.0}, {10000, 0.01}};
  CHECK_THROWS_AS(fit_rate(zero), domain_error);
}

TEST_CASE("statistics") {
  const std::vector<double> v{5, 1, 4, 2, 3};
  CHECK(Statistic{StatisticKind::median, 0.5}.apply(v) == 3.0);
  CHECK(Statistic{StatisticKind::mean, 0.5}.apply(v) == 3.0);
  CHECK(Statistic{StatisticKind::quantile, 0.9}.apply(v) == doctest::Approx(4.6));
  CHECK(Statistic{StatisticKind::quantile, 0.0}.apply(v) == 1.0);
  CHECK(Statistic{StatisticKind::quantile, 0.9}.name() == "quantile(0.9)");
}

TEST_CASE("config parsing") {
  const auto c = config_from(R"({"schema": "winf-config/1", "density": "tent.json",
      "n_grid": {"from": 128, "to": 131072, "ratio": 2}, "trials": 200, "seed": 5,
      "statistic": {"quantile": 0.9}})");
  CHECK(c.n_grid.size() == 11);
  CHECK(c.n_grid.front() == 128);
  CHECK(c.n_grid.back() == 131072);
  CHECK(c.trials == 200);
  CHECK(c.base_seed == 5);
  CHECK(c.statistic.kind == StatisticKind::quantile);
  CHECK(c.density == std::filesystem::path(WINF_MODELS_DIR) / "tent.json");
  CHECK_NOTHROW(c.validate_for_rate());

  auto zero_trials = c;
  zero_trials.trials = 0;
  CHECK_THROWS_AS(zero_trials.validate_for_rate(), config_error);
  auto short_grid = c;
  short_grid.n_grid = {100, 200, 400};
  CHECK_THROWS_AS(short_grid.validate_for_rate(), config_error);
  auto unsorted = c;
  unsorted.n_grid = {100, 400, 200, 800};
  CHECK_THROWS_AS(unsorted.validate_for_rate(), config_error);

  CHECK_THROWS_AS(config_from(R"({"density": "a.json", "bogus": 1})"), config_error);
  CHECK_THROWS_AS(config_from(R"({"schema": "winf-config/2", "density": "a.json"})"), config_error);
  CHECK_THROWS_AS(config_from(R"({"n_grid": [1, 2]})"), config_error);
  CHECK_THROWS_AS(load_config("/nonexistent/missing.cfg"), io_error);
}

TEST_CASE("inequality flags") {
  CHECK(check_inequalities(0.5, 0.1, 0.6, 1.0) == 0);
  CHECK(check_inequalities(1.5, 0.1, 2.0, 1.0) == kViolationWinfAboveOne);
  CHECK(check_inequalities(0.1, 0.2, 0.4, 1.0) == kViolationW1AboveWinf);
  CHECK(check_inequalities(0.5, 0.1, 0.4, 2.0) == kViolationKsBound);
  CHECK(check_inequalities(0.5, 0.1, 0.0, 0.0) == 0);
}

TEST_CASE("records do not depend on the worker count") {
  const auto T = evaluator("tent");
  const std::vector<std::size_t> grid{16, 100, 333};
  const auto one = run_trials(T, grid, 25, 77, 1);
  const auto many = run_trials(T, grid, 25, 77, 4);
  REQUIRE(one.size() == 75);
  CHECK(one == many);
  CHECK(one[30].n == 100);
  CHECK(one[30].trial == 5);
  CHECK(one[30].seed == mix_seed(trial_stream_base(77, 100), 5));
  for (const auto& r : one) CHECK(r.violations == 0);
}

TEST_CASE("record CSV round trip is lossless") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<RunRecord> records;
  for (std::size_t i = 0; i < 1000; ++i) {
    records.push_back({"tent", 100 + i, i % 7, rng(), u(rng), u(rng) * 1e-7, u(rng),
                       static_cast<unsigned>(i % 8)});
  }
  std::stringstream buf;
  write_records(buf, records);
  CHECK(read_records(buf) == records);

  const auto path = std::filesystem::temp_directory_path() / "winf_records_roundtrip.csv";
  persist_records(records, path);
  CHECK(load_records(path) == records);
  std::filesystem::remove(path);

  std::stringstream empty;
  write_records(empty, {});
  CHECK(empty.str() == "schema,model_id,n,trial,seed,w_inf,w_one,ks,violations\n");
  CHECK(read_records(empty).empty());
}

TEST_CASE("corrupt headers and rows name the expected schema") {
  std::stringstream bad("schema,model,n\n");
  try {
    read_records(bad);
    FAIL("expected an io error");
  } catch (const io_error& e) {
    CHECK(std::string(e.what()).find("winf-records/1") != std::string::npos);
  }
  std::stringstream row("schema,model_id,n,trial,seed,w_inf,w_one,ks,violations\n"
                        "winf-records/0,tent,1,0,1,0.1,0.1,0.1,0\n");
  CHECK_THROWS_AS(read_records(row), io_error);
}

TEST_CASE("small rate experiment") {
  const auto U = evaluator("uniform");
  auto c = config_from(R"({"density": "uniform.json", "n_grid": [64, 256, 1024, 4096],
      "trials": 40, "seed": 9})");
  const auto r = run_rate_experiment(U, c, 2);
  CHECK(r.records.size() == 160);
  CHECK(r.points.size() == 4);
  CHECK(r.fit.slope < -0.3);
  CHECK(r.fit.slope > -0.8);
  CHECK(r.violation_count == 0);
  CHECK(r.fit_median.slope == r.fit.slope);
  c.trials = 0;
  CHECK_THROWS_AS(run_rate_experiment(U, c, 1), config_error);
}

TEST_CASE("coverage preconditions") {
  const auto T = evaluator("tent");
  auto c = config_from(R"({"density": "tent.json", "n_grid": [100], "trials": 10,
      "envelope_M": [10]})");
  CHECK_THROWS_AS(run_coverage_experiment(T, c, 1), config_error);
  c.envelope_M.clear();
  c.dkw_t = {0.0};
  CHECK_THROWS_AS(run_coverage_experiment(T, c, 1), config_error);
  c.dkw_t = {0.1};
  const auto r = run_coverage_experiment(T, c, 1);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].cap == doctest::Approx(2.0 * std::exp(-2.0)));
}
