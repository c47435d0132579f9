#include "winf/cli.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "winf/bounds.hpp"
#include "winf/construction.hpp"
#include "winf/density.hpp"
#include "winf/error.hpp"
#include "winf/experiments.hpp"
#include "winf/model_io.hpp"
#include "winf/sampling.hpp"
#include "winf/transport.hpp"

namespace winf {

namespace {

struct Options {
  std::string density;
  std::string config;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  std::string out;
  double beta = kDefaultBeta;
  bool force_accept = false;
  std::size_t trials = 1;
  double p = 0.5;
  double rate_constant = 1.0;
  std::vector<std::size_t> n_list{100, 1000, 10000};
  std::vector<double> t_list{0.01, 0.02, 0.05, 0.1};
};

CdfEvaluator open_density(const std::string& path, bool force, std::ostream& err) {
  auto model = load_density(path);
  err << "loaded density '" << model.id() << "' from " << path << '\n';
  return CdfEvaluator::accept(std::move(model), force);
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw io_error("cannot write " + path);
  return f;
}

void print_json(std::ostream& out, const nlohmann::json& j) { out << j.dump(2) << '\n'; }

int cmd_validate(const Options& o, std::ostream& out, std::ostream& err) {
  const auto model = load_density(o.density);
  err << "validating density '" << model.id() << "'\n";
  nlohmann::json j = to_json(validate_model(model));
  j["model_id"] = model.id();
  j["normalization"] = model.normalization();
  print_json(out, j);
  return 0;
}

int cmd_sample(const Options& o, std::ostream& out, std::ostream& err) {
  const auto F = open_density(o.density, o.force_accept, err);
  if (o.trials < 1) throw domain_error("trials must be at least 1");
  std::vector<EmpiricalMeasure> batches;
  for (std::size_t t = 0; t < o.trials; ++t) {
    batches.push_back(draw_samples(F, o.n, {trial_stream_base(o.seed, o.n), t}));
  }
  if (o.out.empty()) {
    write_samples_csv(out, batches);
  } else {
    auto f = open_output(o.out);
    write_samples_csv(f, batches);
    err << "wrote " << o.trials << " x " << o.n << " samples to " << o.out << '\n';
  }
  return 0;
}

int cmd_distance(const Options& o, std::ostream& out, std::ostream& err) {
  const auto F = open_density(o.density, o.force_accept, err);
  const auto em = draw_samples(F, o.n, {trial_stream_base(o.seed, o.n), 0});
  auto j = to_json(measure_distances(F, em));
  j["ks"] = ks_statistic(em, F);
  j["model_id"] = F.model().id();
  j["seed"] = em.seed();
  print_json(out, j);
  return 0;
}

int cmd_bound_table(const Options& o, std::ostream& out, std::ostream& err) {
  std::ofstream file;
  std::ostream* dst = &out;
  if (!o.out.empty()) {
    file = open_output(o.out);
    dst = &file;
  }
  *dst << "n,t,dkw,chernoff,bernstein,chebyshev\n";
  char buf[256];
  for (std::size_t n : o.n_list) {
    for (double t : o.t_list) {
      const auto b = binomial_tails(n, o.p, t);
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", n, t, dkw_tail(n, t),
                    b.chernoff, b.bernstein, b.chebyshev);
      *dst << buf;
    }
  }
  if (!o.out.empty()) err << "wrote bound table to " << o.out << '\n';
  return 0;
}

int cmd_transport_cert(const Options& o, std::ostream& out, std::ostream& err) {
  const auto F = open_density(o.density, o.force_accept, err);
  const auto em = draw_samples(F, o.n, {trial_stream_base(o.seed, o.n), 0});
  const auto scheme = build_partition(F, em, o.beta);
  const auto tilted = build_tilted_measures(scheme, F, em);
  const auto cert = assemble_certificate(scheme, tilted, F, em, o.rate_constant);
  err << "certificate: " << scheme.layers.size() << " layers, " << cert.cells.size()
      << " transport cells\n";
  if (!o.out.empty()) {
    auto f = open_output(o.out);
    write_cells_csv(f, cert);
    err << "wrote per-cell displacements to " << o.out << '\n';
  }
  print_json(out, {{"model_id", F.model().id()},
                   {"seed", em.seed()},
                   {"partition", to_json(scheme)},
                   {"certificate", to_json(cert)}});
  return 0;
}

ExperimentConfig read_config(const Options& o) {
  if (o.config.empty()) throw config_error("--config is required");
  auto c = load_config(o.config);
  if (o.force_accept) c.force_accept = true;
  if (!o.out.empty()) c.records_path = o.out;
  return c;
}

unsigned worker_count(const Options& o) { return o.workers ? o.workers : default_workers(); }

int cmd_rate(const Options& o, std::ostream& out, std::ostream& err) {
  const auto c = read_config(o);
  c.validate_for_rate();
  const auto F = open_density(c.density.string(), c.force_accept, err);
  err << "rate experiment: " << c.n_grid.size() << " sizes x " << c.trials << " trials, "
      << worker_count(o) << " workers\n";
  const auto result = run_rate_experiment(F, c, worker_count(o));
  if (c.records_path) persist_records(result.records, *c.records_path);
  auto j = to_json(result);
  j["statistic"] = c.statistic.name();
  j["seed"] = c.base_seed;
  if (c.fit_path) {
    std::ofstream f(*c.fit_path);
    if (!f) throw io_error("cannot write " + c.fit_path->string());
    f << j.dump(2) << '\n';
  }
  print_json(out, j);
  return 0;
}

int cmd_coverage(const Options& o, std::ostream& out, std::ostream& err) {
  const auto c = read_config(o);
  c.validate_for_coverage();
  const auto F = open_density(c.density.string(), c.force_accept, err);
  err << "coverage experiment: " << c.n_grid.size() << " sizes x " << c.trials << " trials, "
      << worker_count(o) << " workers\n";
  const auto result = run_coverage_experiment(F, c, worker_count(o));
  if (c.records_path) persist_records(result.records, *c.records_path);
  auto j = to_json(result);
  j["seed"] = c.base_seed;
  print_json(out, j);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Empirical infinity-Wasserstein convergence toolkit", "winf"};
  app.require_subcommand(1);
  Options o;

  auto density = [&](CLI::App* s) {
    s->add_option("--density", o.density, "density specification (JSON)")->required();
  };
  auto sampling = [&](CLI::App* s) {
    s->add_option("--n", o.n, "sample size")->check(CLI::PositiveNumber);
    s->add_option("--seed", o.seed, "base seed");
    s->add_flag("--force-accept", o.force_accept, "skip the validation gate");
  };

  auto* validate = app.add_subcommand("validate-density", "check a density against the convergence assumptions");
  density(validate);

  auto* sample = app.add_subcommand("sample", "draw samples to CSV");
  density(sample);
  sampling(sample);
  sample->add_option("--trials", o.trials, "independent batches");
  sample->add_option("--out", o.out, "CSV output path (default stdout)");

  auto* distance = app.add_subcommand("distance", "W_inf, W_1 and KS distance of one sample");
  density(distance);
  sampling(distance);

  auto* bounds = app.add_subcommand("bound-table", "CSV of concentration bounds over an (n, t) grid");
  bounds->add_option("--n", o.n_list, "sample sizes")->check(CLI::PositiveNumber);
  bounds->add_option("--t", o.t_list, "deviations");
  bounds->add_option("--p", o.p, "success probability for the binomial bounds");
  bounds->add_option("--out", o.out, "CSV output path (default stdout)");

  auto* cert = app.add_subcommand("transport-cert", "transport certificate for one sample");
  density(cert);
  sampling(cert);
  cert->add_option("--beta", o.beta, "layer exponent (> 2)");
  cert->add_option("--rate-constant", o.rate_constant, "constant C of the reference rate");
  cert->add_option("--out", o.out, "CSV of per-cell displacements");

  auto experiment = [&](CLI::App* s) {
    s->add_option("--config", o.config, "experiment config (JSON)")->required();
    s->add_option("--workers", o.workers, "worker threads (default: available parallelism)");
    s->add_option("--out", o.out, "records CSV (overrides the config)");
    s->add_flag("--force-accept", o.force_accept, "skip the validation gate");
  };
  auto* rate = app.add_subcommand("rate-experiment", "Monte Carlo rate fit over an n grid");
  experiment(rate);
  auto* coverage = app.add_subcommand("coverage-experiment", "envelope and DKW coverage frequencies");
  experiment(coverage);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n' << app.help();
    return 2;
  }

  try {
    if (validate->parsed()) return cmd_validate(o, out, err);
    if (sample->parsed()) return cmd_sample(o, out, err);
    if (distance->parsed()) return cmd_distance(o, out, err);
    if (bounds->parsed()) return cmd_bound_table(o, out, err);
    if (cert->parsed()) return cmd_transport_cert(o, out, err);
    if (rate->parsed()) return cmd_rate(o, out, err);
    if (coverage->parsed()) return cmd_coverage(o, out, err);
  } catch (const error& e) {
    err << "winf-error: " << e.kind() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "winf-error: internal: " << e.what() << '\n';
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace winf
