#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "winf/density.hpp"

namespace winf {

// Seed of one independent stream. The generator seed is
// mix_seed(base_seed, stream_index), so parallel trials never depend on
// scheduling order.
struct SeedSpec {
  std::uint64_t base_seed = 0;
  std::uint64_t stream_index = 0;
};

// SplitMix64 finalizer applied to base + (stream + 1) * 0x9E3779B97F4A7C15.
// For a fixed base this is a bijection of the stream index.
std::uint64_t mix_seed(std::uint64_t base_seed, std::uint64_t stream_index);

// Order statistics X_(1) <= ... <= X_(n) of a sample in (0,1).
class EmpiricalMeasure {
 public:
  // Sorts (stably) and checks every sample lies in the open unit interval.
  EmpiricalMeasure(std::vector<double> samples, std::uint64_t seed = 0, std::string model_id = {});

  std::span<const double> samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  double operator[](std::size_t i) const { return samples_[i]; }
  std::uint64_t seed() const { return seed_; }
  const std::string& model_id() const { return model_id_; }

  // F_n(x) = #{X_i <= x} / n.
  double cdf(double x) const;
  // #{X_i < x}.
  std::size_t count_below(double x) const;
  // #{a <= X_i < b}.
  std::size_t count_in(double a, double b) const;

 private:
  std::vector<double> samples_;
  std::uint64_t seed_ = 0;
  std::string model_id_;
};

inline constexpr double kSampleClamp = 1e-15;

// Inverse-transform sampling: n uniforms from the seeded stream mapped
// through F^{-1}, clamped to [1e-15, 1 - 1e-15], then sorted.
EmpiricalMeasure draw_samples(const CdfEvaluator& F, std::size_t n, SeedSpec seed);

// F_n^{-1}(y) = X_(i) for y in ((i-1)/n, i/n].
double empirical_quantile(const EmpiricalMeasure& em, double y);

// sup_x |F_n(x) - F(x)|, exact for the right-continuous step F_n.
double ks_statistic(const EmpiricalMeasure& em, const CdfEvaluator& F);

// CSV with header "trial,index,value"; index is 1-based within a trial.
void write_samples_csv(std::ostream& out, std::span<const EmpiricalMeasure> trials);

}  // namespace winf
