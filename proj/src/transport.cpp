#include "winf/transport.hpp"

#include <algorithm>
#include <cmath>

#include "winf/error.hpp"
#include "winf/model_io.hpp"

namespace winf {

QuantileGrid::QuantileGrid(const CdfEvaluator& F, std::size_t n) : left_(n), right_(n) {
  if (n == 0) throw domain_error("quantile grid needs n >= 1");
  const auto nn = static_cast<double>(n);
  const Interval support = F.support();
  for (std::size_t i = 0; i < n; ++i) {
    left_[i] = i == 0 ? support.lo : F.quantile_upper(static_cast<double>(i) / nn);
    right_[i] = i + 1 == n ? support.hi : F.quantile(static_cast<double>(i + 1) / nn);
  }
}

DistanceReport winf_empirical(const QuantileGrid& grid, const EmpiricalMeasure& em) {
  if (grid.size() != em.size()) throw domain_error("quantile grid and sample sizes differ");
  DistanceReport r;
  r.n = em.size();
  r.w_infinity = -1.0;
  // On cell i the empirical quantile is the constant X_(i) while F^{-1} is
  // nondecreasing, so |X_(i) - F^{-1}(y)| peaks at one of the cell ends.
  for (std::size_t i = 0; i < em.size(); ++i) {
    const double x = em[i];
    const double dl = std::abs(x - grid.left(i));
    const double dr = std::abs(x - grid.right(i));
    if (dl > r.w_infinity) {
      r.w_infinity = dl;
      r.argmax_index = i + 1;
      r.argmax_endpoint = CellEndpoint::left;
    }
    if (dr > r.w_infinity) {
      r.w_infinity = dr;
      r.argmax_index = i + 1;
      r.argmax_endpoint = CellEndpoint::right;
    }
  }
  return r;
}

DistanceReport winf_empirical(const CdfEvaluator& F, const EmpiricalMeasure& em) {
  return winf_empirical(QuantileGrid(F, em.size()), em);
}

double w1_empirical(const CdfEvaluator& F, const EmpiricalMeasure& em) {
  const std::size_t n = em.size();
  const auto nn = static_cast<double>(n);
  // int_u^v F = v F(v) - u F(u) - (M(v) - M(u)) with M the partial first moment.
  auto integral_of_cdf = [&](double u, double fu, double mu, double v, double fv, double mv) {
    return v * fv - u * fu - (mv - mu);
  };

  double total = 0.0;
  double u = 0.0;
  double fu = 0.0;
  double mu = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double v = i < n ? em[i] : 1.0;
    if (v > u) {
      const double level = static_cast<double>(i) / nn;  // F_n on [u, v)
      const double fv = F.cdf(v);
      const double mv = F.partial_moment(v);
      // F < level left of the crossing point and F >= level right of it.
      const double xs = std::clamp(F.quantile(level), u, v);
      const double fs = F.cdf(xs);
      const double ms = F.partial_moment(xs);
      const double below = level * (xs - u) - integral_of_cdf(u, fu, mu, xs, fs, ms);
      const double above = integral_of_cdf(xs, fs, ms, v, fv, mv) - level * (v - xs);
      total += std::max(0.0, below) + std::max(0.0, above);
      u = v;
      fu = fv;
      mu = mv;
    }
  }
  return total;
}

DistanceReport measure_distances(const CdfEvaluator& F, const QuantileGrid& grid,
                                 const EmpiricalMeasure& em) {
  auto r = winf_empirical(grid, em);
  r.w_one = w1_empirical(F, em);
  return r;
}

DistanceReport measure_distances(const CdfEvaluator& F, const EmpiricalMeasure& em) {
  return measure_distances(F, QuantileGrid(F, em.size()), em);
}

double winf_discrete(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw domain_error("bottleneck matching needs equal sizes");
  if (!std::is_sorted(xs.begin(), xs.end()) || !std::is_sorted(ys.begin(), ys.end())) {
    throw domain_error("bottleneck matching needs sorted inputs");
  }
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) d = std::max(d, std::abs(xs[i] - ys[i]));
  return d;
}

nlohmann::json to_json(const DistanceReport& r) {
  return {{"n", r.n},
          {"w_infinity", r.w_infinity},
          {"w_one", r.w_one ? nlohmann::json(*r.w_one) : nlohmann::json(nullptr)},
          {"argmax_index", r.argmax_index},
          {"argmax_endpoint", r.argmax_endpoint == CellEndpoint::left ? "left" : "right"}};
}

}  // namespace winf
