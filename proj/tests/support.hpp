#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "winf/density.hpp"
#include "winf/model_io.hpp"

namespace testing {

inline std::string model_path(const std::string& name) {
  return std::string(WINF_MODELS_DIR) + "/" + name + ".json";
}

inline winf::CdfEvaluator evaluator(const std::string& name, bool force = false) {
  return winf::CdfEvaluator::accept(winf::load_density(model_path(name)), force);
}

// Closed forms written out by hand, independent of the library's piece code.
inline double tent_cdf(double x) { return x <= 0.5 ? 2 * x - 2 * x * x : 0.5 + 2 * (x - 0.5) * (x - 0.5); }
inline double quadratic_cdf(double x) { return 0.5 + 4 * std::pow(x - 0.5, 3); }

// 8-point Gauss-Legendre on [a, b] split into `panels` panels.
inline double gauss_legendre(const std::function<double(double)>& f, double a, double b,
                             int panels = 64) {
  static const double nodes[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                  0.9602898564975363};
  static const double weights[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                    0.1012285362903763};
  double total = 0.0;
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + h * (p + 0.5);
    const double half = 0.5 * h;
    for (int i = 0; i < 4; ++i) {
      total += weights[i] * half * (f(mid - half * nodes[i]) + f(mid + half * nodes[i]));
    }
  }
  return total;
}

// inf{x in [lo, hi] : g(x) >= y} for nondecreasing g, by bisection.
inline double bisect_inverse(const std::function<double(double)>& g, double y, double lo = 0.0,
                             double hi = 1.0) {
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (g(mid) >= y) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

// min over all permutations of max_i |xs[pi(i)] - ys[i]|.
inline double bottleneck_by_permutation(std::vector<double> xs, const std::vector<double>& ys) {
  std::sort(xs.begin(), xs.end());
  double best = INFINITY;
  do {
    double worst = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) worst = std::max(worst, std::abs(xs[i] - ys[i]));
    best = std::min(best, worst);
  } while (std::next_permutation(xs.begin(), xs.end()));
  return best;
}

// sup over a y-grid of |F^{-1}(y) - F_n^{-1}(y)|, with the grid taken as the
// image of the midpoints (k + 1/2)/N under a strictly increasing cdf. Then
// F^{-1}(y_k) = (k + 1/2)/N and F_n^{-1}(y) = X_(ceil(n y)). Every quantile
// cell holds a grid point within 1/N of each of its ends, so the result is
// within 1/N of the exact sup; offsetting by 1/2 keeps grid points off the
// cell ends k/N of the uniform model.
inline double winf_by_grid(const std::vector<double>& sorted,
                           const std::function<double(double)>& cdf, std::size_t N) {
  const auto n = static_cast<double>(sorted.size());
  double best = 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    const double x = (static_cast<double>(k) + 0.5) / static_cast<double>(N);
    const double y = cdf(x);
    std::size_t i = y <= 0.0 ? 1 : static_cast<std::size_t>(std::ceil(n * y));
    i = std::clamp<std::size_t>(i, 1, sorted.size());
    best = std::max(best, std::abs(x - sorted[i - 1]));
  }
  return best;
}

}  // namespace testing
