#include "winf/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "winf/bounds.hpp"
#include "winf/error.hpp"
#include "winf/sampling.hpp"
#include "winf/transport.hpp"

namespace winf {

// ---------------------------------------------------------------------------
// Statistics

double Statistic::apply(std::vector<double> values) const {
  if (values.empty()) throw domain_error("statistic of an empty set");
  if (kind == StatisticKind::mean) {
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  }
  std::sort(values.begin(), values.end());
  const double level = kind == StatisticKind::median ? 0.5 : q;
  const double h = level * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::string Statistic::name() const {
  switch (kind) {
    case StatisticKind::median:
      return "median";
    case StatisticKind::mean:
      return "mean";
    case StatisticKind::quantile: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "quantile(%g)", q);
      return buf;
    }
  }
  return "median";
}

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate_for_rate() const {
  if (trials < 1) throw config_error("trials must be at least 1");
  if (n_grid.size() < 4) throw config_error("rate fits need an n_grid of at least 4 sizes");
  if (n_grid.front() < 3) throw config_error("n_grid entries must be at least 3");
  for (std::size_t i = 1; i < n_grid.size(); ++i) {
    if (n_grid[i] <= n_grid[i - 1]) throw config_error("n_grid must be strictly increasing");
  }
}

void ExperimentConfig::validate_for_coverage() const {
  if (trials < 1) throw config_error("trials must be at least 1");
  if (n_grid.empty()) throw config_error("n_grid must not be empty");
  for (std::size_t n : n_grid) {
    if (n < 1) throw config_error("n_grid entries must be positive");
  }
  for (double t : dkw_t) {
    if (!(t > 0.0) || !std::isfinite(t)) throw config_error("dkw_t entries must be positive");
  }
  for (double M : envelope_M) {
    if (!(M > 1.0) || !std::isfinite(M)) throw config_error("envelope_M entries must exceed 1");
  }
  if (envelope_M.empty() && dkw_t.empty()) {
    throw config_error("coverage needs envelope_M or dkw_t entries");
  }
}

namespace {

std::size_t as_size(const nlohmann::json& v, const char* what) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw config_error(std::string(what) + " must be a nonnegative integer");
  }
  return v.get<std::size_t>();
}

std::vector<double> as_numbers(const nlohmann::json& v, const char* what) {
  if (!v.is_array()) throw config_error(std::string(what) + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw config_error(std::string(what) + " must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw config_error("config must be a JSON object");
  ExperimentConfig c;
  for (const auto& [key, v] : doc.items()) {
    if (key == "schema") {
      if (v != kConfigSchema) {
        throw config_error(std::string("unsupported config schema; expected ") + kConfigSchema);
      }
    } else if (key == "density") {
      if (!v.is_string()) throw config_error("density must be a path");
      std::filesystem::path p = v.get<std::string>();
      c.density = p.is_absolute() ? p : base_dir / p;
    } else if (key == "n_grid") {
      if (v.is_array()) {
        for (const auto& e : v) c.n_grid.push_back(as_size(e, "n_grid entries"));
      } else if (v.is_object()) {
        std::size_t from = 0;
        std::size_t to = 0;
        double ratio = 0.0;
        for (const auto& [gk, gv] : v.items()) {
          if (gk == "from") {
            from = as_size(gv, "n_grid.from");
          } else if (gk == "to") {
            to = as_size(gv, "n_grid.to");
          } else if (gk == "ratio") {
            if (!gv.is_number()) throw config_error("n_grid.ratio must be a number");
            ratio = gv.get<double>();
          } else {
            throw config_error("unknown n_grid key '" + gk + "'");
          }
        }
        if (from < 1 || to < from || !(ratio > 1.0)) {
          throw config_error("geometric n_grid needs 1 <= from <= to and ratio > 1");
        }
        for (double x = static_cast<double>(from); x <= static_cast<double>(to) * (1 + 1e-12);
             x *= ratio) {
          const auto n = static_cast<std::size_t>(std::llround(x));
          if (c.n_grid.empty() || n > c.n_grid.back()) c.n_grid.push_back(n);
        }
      } else {
        throw config_error("n_grid must be an array or a geometric {from, to, ratio} object");
      }
    } else if (key == "trials") {
      c.trials = as_size(v, "trials");
    } else if (key == "seed") {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
        throw config_error("seed must be a nonnegative integer");
      }
      c.base_seed = v.get<std::uint64_t>();
    } else if (key == "statistic") {
      if (v == "median") {
        c.statistic = {StatisticKind::median, 0.5};
      } else if (v == "mean") {
        c.statistic = {StatisticKind::mean, 0.5};
      } else if (v.is_object() && v.size() == 1 && v.contains("quantile") &&
                 v["quantile"].is_number()) {
        const double q = v["quantile"].get<double>();
        if (!(q >= 0.0 && q <= 1.0)) throw config_error("statistic quantile must lie in [0,1]");
        c.statistic = {StatisticKind::quantile, q};
      } else {
        throw config_error("statistic must be \"median\", \"mean\" or {\"quantile\": q}");
      }
    } else if (key == "envelope_M") {
      c.envelope_M = as_numbers(v, "envelope_M");
    } else if (key == "dkw_t") {
      c.dkw_t = as_numbers(v, "dkw_t");
    } else if (key == "force_accept") {
      if (!v.is_boolean()) throw config_error("force_accept must be a boolean");
      c.force_accept = v.get<bool>();
    } else if (key == "records" || key == "fit") {
      if (!v.is_string()) throw config_error(key + " must be a path");
      std::filesystem::path p = v.get<std::string>();
      (key == "records" ? c.records_path : c.fit_path) = p.is_absolute() ? p : base_dir / p;
    } else {
      throw config_error("unknown config key '" + key + "'");
    }
  }
  if (c.density.empty()) throw config_error("config needs a density path");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw config_error("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

// ---------------------------------------------------------------------------
// Trials

unsigned check_inequalities(double w_inf, double w_one, double ks, double lambda) {
  constexpr double kSlack = 1e-12;
  unsigned flags = 0;
  if (w_inf > 1.0 + kSlack) flags |= kViolationWinfAboveOne;
  if (w_one > w_inf * (1.0 + 1e-9) + kSlack) flags |= kViolationW1AboveWinf;
  if (lambda > 0.0 && w_inf > (ks / lambda) * (1.0 + 1e-9) + kSlack) flags |= kViolationKsBound;
  return flags;
}

std::uint64_t trial_stream_base(std::uint64_t base_seed, std::size_t n) {
  return mix_seed(base_seed, static_cast<std::uint64_t>(n));
}

unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

namespace {

// Runs body(i) for i in [0, count) on up to `workers` threads; rethrows the
// first exception after all threads stop.
template <class Body>
void parallel_for(std::size_t count, unsigned workers, Body body) {
  workers = std::max(1u, workers);
  if (workers == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const auto threads = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

std::vector<RunRecord> run_trials(const CdfEvaluator& F, std::span<const std::size_t> n_grid,
                                  std::size_t trials, std::uint64_t base_seed, unsigned workers) {
  const double lambda = F.model().lower_bound();
  const std::string& id = F.model().id();

  // One quantile grid per n, shared by all its trials.
  std::vector<std::optional<QuantileGrid>> grids(n_grid.size());
  parallel_for(n_grid.size(), workers, [&](std::size_t g) { grids[g].emplace(F, n_grid[g]); });

  std::vector<RunRecord> records(n_grid.size() * trials);
  parallel_for(records.size(), workers, [&](std::size_t slot) {
    const std::size_t g = slot / trials;
    const std::size_t t = slot % trials;
    const std::size_t n = n_grid[g];
    const auto em = draw_samples(F, n, {trial_stream_base(base_seed, n), t});
    const auto report = measure_distances(F, *grids[g], em);
    RunRecord& r = records[slot];
    r.model_id = id;
    r.n = n;
    r.trial = t;
    r.seed = em.seed();
    r.w_inf = report.w_infinity;
    r.w_one = *report.w_one;
    r.ks = ks_statistic(em, F);
    r.violations = check_inequalities(r.w_inf, r.w_one, r.ks, lambda);
  });
  return records;
}

// ---------------------------------------------------------------------------
// Rate fits

int max_zero_order(const DensityModel& model) {
  int k = 0;
  for (const auto& z : model.zeros()) k = std::max(k, z.order);
  return k;
}

RateFit fit_rate(std::span<const std::pair<std::size_t, double>> points, int k_max) {
  if (points.size() < 4) throw domain_error("rate fit needs at least 4 points");
  if (k_max < 0) throw domain_error("zero order must be nonnegative");
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& [n, s] : points) {
    if (n < 2) throw domain_error("rate fit needs n >= 2");
    if (!(s > 0.0) || !std::isfinite(s)) throw domain_error("rate fit needs positive statistics");
    const double nn = static_cast<double>(n);
    xs.push_back(std::log(nn / std::log(nn)));
    ys.push_back(std::log(s));
  }
  const auto m = static_cast<double>(xs.size());
  const double xbar = std::accumulate(xs.begin(), xs.end(), 0.0) / m;
  const double ybar = std::accumulate(ys.begin(), ys.end(), 0.0) / m;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - xbar) * (xs[i] - xbar);
    sxy += (xs[i] - xbar) * (ys[i] - ybar);
  }
  if (!(sxx > 0.0)) throw domain_error("rate fit needs distinct n values");

  RateFit fit;
  fit.points = xs.size();
  fit.k_max = k_max;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  double ssr = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ssr += r * r;
  }
  fit.residual_se = std::sqrt(ssr / (m - 2.0));
  fit.predicted_exponent = -1.0 / (2.0 * (k_max + 1.0));
  fit.pinned_intercept = ybar - fit.predicted_exponent * xbar;
  fit.fitted_constant = std::exp(fit.pinned_intercept);
  return fit;
}

RateResult run_rate_experiment(const CdfEvaluator& F, const ExperimentConfig& config,
                               unsigned workers) {
  config.validate_for_rate();
  RateResult result;
  result.model_id = F.model().id();
  result.records = run_trials(F, config.n_grid, config.trials, config.base_seed, workers);
  const int k = max_zero_order(F.model());

  std::vector<std::pair<std::size_t, double>> chosen;
  std::vector<std::pair<std::size_t, double>> medians;
  std::vector<std::pair<std::size_t, double>> p90s;
  const Statistic median{StatisticKind::median, 0.5};
  const Statistic mean{StatisticKind::mean, 0.5};
  const Statistic p90{StatisticKind::quantile, 0.9};
  for (std::size_t g = 0; g < config.n_grid.size(); ++g) {
    std::vector<double> w;
    for (std::size_t t = 0; t < config.trials; ++t) w.push_back(result.records[g * config.trials + t].w_inf);
    RatePoint p;
    p.n = config.n_grid[g];
    p.statistic = config.statistic.apply(w);
    p.median = median.apply(w);
    p.mean = mean.apply(w);
    p.p90 = p90.apply(w);
    chosen.emplace_back(p.n, p.statistic);
    medians.emplace_back(p.n, p.median);
    p90s.emplace_back(p.n, p.p90);
    result.points.push_back(p);
  }
  result.fit = fit_rate(chosen, k);
  result.fit_median = fit_rate(medians, k);
  result.fit_p90 = fit_rate(p90s, k);
  result.statistics_disagree =
      std::abs(result.fit_median.slope - result.fit_p90.slope) > kSlopeDisagreement;

  // Exceedance of the envelope C (log n / n)^{1/(2(k+1))} with C from the
  // pinned fit of the chosen statistic.
  const auto T = static_cast<double>(config.trials);
  for (std::size_t g = 0; g < config.n_grid.size(); ++g) {
    const double nn = static_cast<double>(config.n_grid[g]);
    const double envelope =
        result.fit.fitted_constant * std::pow(std::log(nn) / nn, 1.0 / (2.0 * (k + 1.0)));
    std::size_t above = 0;
    for (std::size_t t = 0; t < config.trials; ++t) {
      if (result.records[g * config.trials + t].w_inf > envelope) ++above;
    }
    result.points[g].exceed_fraction = static_cast<double>(above) / T;
  }
  for (std::size_t g = 1; g < result.points.size(); ++g) {
    const double a = result.points[g - 1].exceed_fraction;
    const double b = result.points[g].exceed_fraction;
    const double p = std::clamp(0.5 * (a + b), 1.0 / T, 1.0 - 1.0 / T);
    if (b > a + 3.0 * std::sqrt(2.0 * p * (1.0 - p) / T)) result.exceedance_nonincreasing = false;
  }
  for (const auto& r : result.records) result.violation_count += r.violations != 0;
  return result;
}

// ---------------------------------------------------------------------------
// Coverage

CoverageResult run_coverage_experiment(const CdfEvaluator& F, const ExperimentConfig& config,
                                       unsigned workers) {
  config.validate_for_coverage();
  const double lambda = F.model().lower_bound();
  if (!config.envelope_M.empty() && !(lambda > 0.0)) {
    throw config_error("the W_inf envelope needs a density bounded below by lambda > 0");
  }
  CoverageResult result;
  result.model_id = F.model().id();
  result.records = run_trials(F, config.n_grid, config.trials, config.base_seed, workers);
  const auto T = static_cast<double>(config.trials);

  auto finish = [&](CoverageRow row) {
    row.trials = config.trials;
    row.frequency = static_cast<double>(row.exceed) / T;
    row.slack = 3.0 * std::sqrt(row.cap * (1.0 - row.cap) / T);
    row.within = row.frequency <= row.cap + row.slack;
    result.rows.push_back(std::move(row));
  };
  for (std::size_t g = 0; g < config.n_grid.size(); ++g) {
    const std::size_t n = config.n_grid[g];
    const auto first = result.records.begin() + static_cast<std::ptrdiff_t>(g * config.trials);
    const auto last = first + static_cast<std::ptrdiff_t>(config.trials);
    for (double M : config.envelope_M) {
      CoverageRow row;
      row.check = "envelope";
      row.n = n;
      row.parameter = M;
      row.threshold = thm1_envelope(lambda, n, M);
      row.cap = 1.0 / M;
      row.exceed = static_cast<std::size_t>(
          std::count_if(first, last, [&](const RunRecord& r) { return r.w_inf > row.threshold; }));
      finish(std::move(row));
    }
    for (double t : config.dkw_t) {
      CoverageRow row;
      row.check = "dkw";
      row.n = n;
      row.parameter = t;
      row.threshold = t;
      row.cap = dkw_tail(n, t);
      row.exceed = static_cast<std::size_t>(
          std::count_if(first, last, [&](const RunRecord& r) { return r.ks >= t; }));
      finish(std::move(row));
    }
  }
  for (const auto& r : result.records) result.violation_count += r.violations != 0;
  return result;
}

// ---------------------------------------------------------------------------
// Records

namespace {

constexpr const char* kRecordsHeader = "schema,model_id,n,trial,seed,w_inf,w_one,ks,violations";

}  // namespace

void write_records(std::ostream& out, std::span<const RunRecord> records) {
  out << kRecordsHeader << '\n';
  char buf[512];
  for (const auto& r : records) {
    if (r.model_id.find_first_of(",\n\r\"") != std::string::npos) {
      throw domain_error("model id '" + r.model_id + "' cannot be written to CSV");
    }
    std::snprintf(buf, sizeof buf, "%s,%s,%zu,%zu,%llu,%.17g,%.17g,%.17g,%u\n", kRecordsSchema,
                  r.model_id.c_str(), r.n, r.trial, static_cast<unsigned long long>(r.seed),
                  r.w_inf, r.w_one, r.ks, r.violations);
    out << buf;
  }
}

std::vector<RunRecord> read_records(std::istream& in) {
  const std::string expected = std::string("expected schema ") + kRecordsSchema;
  std::string line;
  if (!std::getline(in, line) || line != kRecordsHeader) {
    throw io_error("records header mismatch; " + expected + " with header " + kRecordsHeader);
  }
  std::vector<RunRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    const std::string where = "records line " + std::to_string(line_no);
    if (f.size() != 9) throw io_error(where + ": expected 9 fields");
    if (f[0] != kRecordsSchema) throw io_error(where + ": " + expected);
    auto as_u64 = [&](const std::string& s) {
      char* end = nullptr;
      const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
      if (s.empty() || *end != '\0' || s[0] == '-') throw io_error(where + ": bad integer '" + s + "'");
      return static_cast<std::uint64_t>(v);
    };
    auto as_double = [&](const std::string& s) {
      char* end = nullptr;
      const double v = std::strtod(s.c_str(), &end);
      if (s.empty() || *end != '\0') throw io_error(where + ": bad number '" + s + "'");
      return v;
    };
    RunRecord r;
    r.model_id = f[1];
    r.n = as_u64(f[2]);
    r.trial = as_u64(f[3]);
    r.seed = as_u64(f[4]);
    r.w_inf = as_double(f[5]);
    r.w_one = as_double(f[6]);
    r.ks = as_double(f[7]);
    r.violations = static_cast<unsigned>(as_u64(f[8]));
    out.push_back(std::move(r));
  }
  return out;
}

void persist_records(std::span<const RunRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write records to " + path.string());
  write_records(out, records);
  if (!out) throw io_error("failed writing records to " + path.string());
}

std::vector<RunRecord> load_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open records " + path.string());
  return read_records(in);
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const RateFit& fit) {
  return {{"slope", fit.slope},
          {"intercept", fit.intercept},
          {"residual_se", fit.residual_se},
          {"points", fit.points},
          {"k_max", fit.k_max},
          {"predicted_exponent", fit.predicted_exponent},
          {"pinned_intercept", fit.pinned_intercept},
          {"fitted_constant", fit.fitted_constant}};
}

nlohmann::json to_json(const RateResult& result) {
  auto points = nlohmann::json::array();
  for (const auto& p : result.points) {
    points.push_back({{"n", p.n},
                      {"statistic", p.statistic},
                      {"median", p.median},
                      {"mean", p.mean},
                      {"p90", p.p90},
                      {"exceed_fraction", p.exceed_fraction}});
  }
  return {{"model_id", result.model_id},
          {"records", result.records.size()},
          {"points", std::move(points)},
          {"fit", to_json(result.fit)},
          {"fit_median", to_json(result.fit_median)},
          {"fit_p90", to_json(result.fit_p90)},
          {"statistics_disagree", result.statistics_disagree},
          {"exceedance_nonincreasing", result.exceedance_nonincreasing},
          {"violation_count", result.violation_count}};
}

nlohmann::json to_json(const CoverageResult& result) {
  auto rows = nlohmann::json::array();
  for (const auto& r : result.rows) {
    rows.push_back({{"check", r.check},
                    {"n", r.n},
                    {"parameter", r.parameter},
                    {"threshold", r.threshold},
                    {"trials", r.trials},
                    {"exceed", r.exceed},
                    {"frequency", r.frequency},
                    {"cap", r.cap},
                    {"slack", r.slack},
                    {"within", r.within}});
  }
  return {{"model_id", result.model_id},
          {"records", result.records.size()},
          {"rows", std::move(rows)},
          {"violation_count", result.violation_count}};
}

}  // namespace winf
