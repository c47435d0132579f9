#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "winf/density.hpp"

namespace winf {

// Config files are JSON documents:
//
//   {
//     "schema": "winf-config/1",
//     "density": "../models/tent.json",         (relative to the config file)
//     "n_grid": [128, 256, 512, 1024]           or {"from": 128, "to": 131072, "ratio": 2}
//     "trials": 200,
//     "seed": 1,
//     "statistic": "median"                     or "mean" or {"quantile": 0.9}
//     "envelope_M": [10],                       (coverage: W_inf envelope checks)
//     "dkw_t": [0.03, 0.05],                    (coverage: DKW checks)
//     "force_accept": false,
//     "records": "out/records.csv",             (optional outputs)
//     "fit": "out/fit.json"
//   }
inline constexpr const char* kConfigSchema = "winf-config/1";
inline constexpr const char* kRecordsSchema = "winf-records/1";

enum class StatisticKind { median, mean, quantile };

struct Statistic {
  StatisticKind kind = StatisticKind::median;
  double q = 0.5;

  // Applied to the per-trial W_inf values of one n; quantiles interpolate
  // linearly between order statistics.
  double apply(std::vector<double> values) const;
  std::string name() const;
};

struct ExperimentConfig {
  std::filesystem::path density;
  std::vector<std::size_t> n_grid;
  std::size_t trials = 1;
  std::uint64_t base_seed = 0;
  Statistic statistic;
  std::vector<double> envelope_M;
  std::vector<double> dkw_t;
  bool force_accept = false;
  std::optional<std::filesystem::path> records_path;
  std::optional<std::filesystem::path> fit_path;

  // Throws config_error. Rate experiments need an increasing grid of at least
  // four sizes; coverage experiments need positive t and M > 1.
  void validate_for_rate() const;
  void validate_for_coverage() const;
};

ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

// Bit flags of the per-record inequality suite.
inline constexpr unsigned kViolationWinfAboveOne = 1u;   // W_inf <= 1
inline constexpr unsigned kViolationW1AboveWinf = 2u;    // W_1 <= W_inf
inline constexpr unsigned kViolationKsBound = 4u;        // W_inf <= ks / lambda

unsigned check_inequalities(double w_inf, double w_one, double ks, double lambda);

struct RunRecord {
  std::string model_id;
  std::size_t n = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double w_inf = 0.0;
  double w_one = 0.0;
  double ks = 0.0;
  unsigned violations = 0;

  bool operator==(const RunRecord&) const = default;
};

// Seed stream of trial t at size n: mix_seed(mix_seed(base, n), t).
std::uint64_t trial_stream_base(std::uint64_t base_seed, std::size_t n);

// Draws every (n, trial) pair on `workers` threads. Records come back ordered
// by (n, trial) and do not depend on the worker count.
std::vector<RunRecord> run_trials(const CdfEvaluator& F, std::span<const std::size_t> n_grid,
                                  std::size_t trials, std::uint64_t base_seed, unsigned workers);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_se = 0.0;
  std::size_t points = 0;
  int k_max = 0;
  double predicted_exponent = 0.0;  // -1 / (2 (k_max + 1))
  // Second fit with the slope pinned to predicted_exponent; C = exp(intercept).
  double pinned_intercept = 0.0;
  double fitted_constant = 0.0;
};

// Least squares of log(statistic) on log(n / log n). Throws domain_error for
// fewer than four points or a nonpositive statistic.
RateFit fit_rate(std::span<const std::pair<std::size_t, double>> points, int k_max = 0);

// Largest declared zero order, 0 without zeros.
int max_zero_order(const DensityModel& model);

struct RatePoint {
  std::size_t n = 0;
  double statistic = 0.0;
  double median = 0.0;
  double mean = 0.0;
  double p90 = 0.0;
  // Fraction of trials above C (log n / n)^{1/(2(k+1))} with the pinned C.
  double exceed_fraction = 0.0;
};

inline constexpr double kSlopeDisagreement = 0.1;

struct RateResult {
  std::string model_id;
  std::vector<RunRecord> records;
  std::vector<RatePoint> points;
  RateFit fit;         // chosen statistic
  RateFit fit_median;
  RateFit fit_p90;
  bool statistics_disagree = false;  // |slope(median) - slope(p90)| > 0.1
  bool exceedance_nonincreasing = true;  // up to 3 binomial standard deviations
  std::size_t violation_count = 0;
};

RateResult run_rate_experiment(const CdfEvaluator& F, const ExperimentConfig& config,
                               unsigned workers);

struct CoverageRow {
  std::string check;  // "envelope" or "dkw"
  std::size_t n = 0;
  double parameter = 0.0;  // M or t
  double threshold = 0.0;  // envelope value or t
  std::size_t trials = 0;
  std::size_t exceed = 0;
  double frequency = 0.0;
  double cap = 0.0;        // 1/M or 2 exp(-2 n t^2)
  double slack = 0.0;      // 3 sqrt(cap (1 - cap) / T)
  bool within = true;
};

struct CoverageResult {
  std::string model_id;
  std::vector<RunRecord> records;
  std::vector<CoverageRow> rows;
  std::size_t violation_count = 0;
};

// Throws config_error when an envelope check is requested for a model with
// lambda = 0 or when t <= 0.
CoverageResult run_coverage_experiment(const CdfEvaluator& F, const ExperimentConfig& config,
                                       unsigned workers);

// CSV with header schema,model_id,n,trial,seed,w_inf,w_one,ks,violations.
void write_records(std::ostream& out, std::span<const RunRecord> records);
std::vector<RunRecord> read_records(std::istream& in);
void persist_records(std::span<const RunRecord> records, const std::filesystem::path& path);
std::vector<RunRecord> load_records(const std::filesystem::path& path);

nlohmann::json to_json(const RateFit& fit);
nlohmann::json to_json(const RateResult& result);
nlohmann::json to_json(const CoverageResult& result);

// Worker count used when none is requested.
unsigned default_workers();

}  // namespace winf
