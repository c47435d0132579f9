#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "winf/density.hpp"
#include "winf/sampling.hpp"

namespace winf {

enum class CellEndpoint { left, right };

struct DistanceReport {
  std::size_t n = 0;
  double w_infinity = 0.0;
  std::optional<double> w_one;
  // Order statistic (1-based) and cell end where the sup is attained.
  std::size_t argmax_index = 1;
  CellEndpoint argmax_endpoint = CellEndpoint::left;
};

// F^{-1} at the ends of the n quantile cells ((i-1)/n, i/n]. Depends only on
// (F, n), so experiments share one grid across all trials of a given n.
class QuantileGrid {
 public:
  QuantileGrid(const CdfEvaluator& F, std::size_t n);

  std::size_t size() const { return left_.size(); }
  // lim_{y -> (i-1)/n+} F^{-1}(y), i = 1..n (0-based storage).
  double left(std::size_t i) const { return left_[i]; }
  // F^{-1}(i/n), i = 1..n; the last cell ends at the top of the support.
  double right(std::size_t i) const { return right_[i]; }

 private:
  std::vector<double> left_;
  std::vector<double> right_;
};

// W_inf(nu, nu_n) = sup_y |F^{-1}(y) - F_n^{-1}(y)| evaluated exactly.
DistanceReport winf_empirical(const CdfEvaluator& F, const EmpiricalMeasure& em);
DistanceReport winf_empirical(const QuantileGrid& grid, const EmpiricalMeasure& em);

// W_1(nu, nu_n) = int_0^1 |F(x) - F_n(x)| dx, integrated in closed form
// between consecutive order statistics.
double w1_empirical(const CdfEvaluator& F, const EmpiricalMeasure& em);

// Both distances at once (the report carries w_one).
DistanceReport measure_distances(const CdfEvaluator& F, const EmpiricalMeasure& em);
DistanceReport measure_distances(const CdfEvaluator& F, const QuantileGrid& grid,
                                 const EmpiricalMeasure& em);

// Bottleneck distance min_pi max_i |xs_pi(i) - ys_i| between two sorted
// samples of equal size; the monotone matching is optimal in one dimension.
double winf_discrete(std::span<const double> xs, std::span<const double> ys);

nlohmann::json to_json(const DistanceReport& report);

}  // namespace winf
