#include "winf/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include "winf/error.hpp"

namespace winf {

std::uint64_t mix_seed(std::uint64_t base_seed, std::uint64_t stream_index) {
  std::uint64_t z = base_seed + (stream_index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

EmpiricalMeasure::EmpiricalMeasure(std::vector<double> samples, std::uint64_t seed,
                                   std::string model_id)
    : samples_(std::move(samples)), seed_(seed), model_id_(std::move(model_id)) {
  if (samples_.empty()) throw domain_error("empirical measure needs at least one sample");
  for (double x : samples_) {
    if (!(x > 0.0 && x < 1.0)) throw domain_error("sample outside the open unit interval");
  }
  std::stable_sort(samples_.begin(), samples_.end());
}

double EmpiricalMeasure::cdf(double x) const {
  const auto it = std::upper_bound(samples_.begin(), samples_.end(), x);
  return static_cast<double>(it - samples_.begin()) / static_cast<double>(samples_.size());
}

std::size_t EmpiricalMeasure::count_below(double x) const {
  return static_cast<std::size_t>(std::lower_bound(samples_.begin(), samples_.end(), x) -
                                  samples_.begin());
}

std::size_t EmpiricalMeasure::count_in(double a, double b) const {
  if (b <= a) return 0;
  return count_below(b) - count_below(a);
}

EmpiricalMeasure draw_samples(const CdfEvaluator& F, std::size_t n, SeedSpec seed) {
  if (n == 0) throw domain_error("sample size must be positive");
  const std::uint64_t stream_seed = mix_seed(seed.base_seed, seed.stream_index);
  std::mt19937_64 rng(stream_seed);
  std::vector<double> xs(n);
  for (auto& x : xs) {
    // 53 random bits, shifted by half a unit so u never hits 0 or 1.
    const double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
    x = std::clamp(F.quantile(u), kSampleClamp, 1.0 - kSampleClamp);
  }
  return EmpiricalMeasure(std::move(xs), stream_seed, F.model().id());
}

double empirical_quantile(const EmpiricalMeasure& em, double y) {
  if (!(y > 0.0 && y <= 1.0)) throw domain_error("empirical quantile argument outside (0,1]");
  const auto n = static_cast<double>(em.size());
  auto i = static_cast<std::size_t>(std::ceil(y * n));
  i = std::clamp<std::size_t>(i, 1, em.size());
  return em[i - 1];
}

double ks_statistic(const EmpiricalMeasure& em, const CdfEvaluator& F) {
  const auto n = static_cast<double>(em.size());
  double d = 0.0;
  for (std::size_t i = 0; i < em.size(); ++i) {
    const double f = F.cdf(em[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n),
                  std::abs(f - static_cast<double>(i + 1) / n)});
  }
  return d;
}

void write_samples_csv(std::ostream& out, std::span<const EmpiricalMeasure> trials) {
  out << "trial,index,value\n";
  char buf[64];
  for (std::size_t t = 0; t < trials.size(); ++t) {
    const auto xs = trials[t].samples();
    for (std::size_t i = 0; i < xs.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", xs[i]);
      out << t << ',' << (i + 1) << ',' << buf << '\n';
    }
  }
}

}  // namespace winf
