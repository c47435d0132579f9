#include "winf/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "winf/error.hpp"

namespace winf {

namespace {

double clipped_exp(double log_value) { return std::min(1.0, std::exp(log_value)); }

void require_positive_t(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw domain_error("t must be positive and finite");
}

}  // namespace

void EnvelopeParams::validate() const {
  if (n < 1) throw domain_error("n must be positive");
  if (!(t > 0.0)) throw domain_error("t must be positive");
  if (!(lambda > 0.0)) throw domain_error("lambda must be positive");
  if (!(M > 1.0)) throw domain_error("M must exceed 1");
  if (!(p > 0.0 && p < 1.0)) throw domain_error("p must lie in (0,1)");
  if (!(rate_constant > 0.0)) throw domain_error("rate constant must be positive");
}

double dkw_tail(std::size_t n, double t) {
  if (n < 1) throw domain_error("n must be positive");
  require_positive_t(t);
  return clipped_exp(std::numbers::ln2 - 2.0 * static_cast<double>(n) * t * t);
}

double thm1_envelope(double lambda, std::size_t n, double M) {
  if (!(lambda > 0.0)) throw domain_error("lambda must be positive");
  if (!(M > 1.0)) throw domain_error("M must exceed 1");
  if (n < 1) throw domain_error("n must be positive");
  return std::sqrt(std::log(2.0 * M) / (2.0 * static_cast<double>(n))) / lambda;
}

double thm2_rate(std::size_t n, std::span<const int> orders, double C) {
  if (n < 2) throw domain_error("rate needs n >= 2");
  if (orders.empty()) throw domain_error("rate needs at least one zero order");
  if (!(C > 0.0)) throw domain_error("rate constant must be positive");
  const double nn = static_cast<double>(n);
  const double base = std::log(nn) / nn;
  double best = 0.0;
  for (int k : orders) {
    if (k < 0) throw domain_error("zero orders must be nonnegative");
    best = std::max(best, std::pow(base, 1.0 / (2.0 * (k + 1))));
  }
  return C * best;
}

double chebyshev_normalized(double u) {
  require_positive_t(u);
  return std::min(1.0, 1.0 / (u * u));
}

double chebyshev_deviation_to_normalized(std::size_t n, double p, double t) {
  return t * std::sqrt(static_cast<double>(n)) / std::sqrt(p * (1.0 - p));
}

BinomialTails binomial_tails(std::size_t n, double p, double t) {
  if (!(p > 0.0 && p < 1.0)) throw domain_error("p must lie in (0,1)");
  if (n < 1) throw domain_error("n must be positive");
  require_positive_t(t);
  const double nn = static_cast<double>(n);
  BinomialTails b;
  b.chebyshev = chebyshev_normalized(chebyshev_deviation_to_normalized(n, p, t));
  b.chernoff = clipped_exp(std::numbers::ln2 - 2.0 * nn * t * t);
  const double exponent = (0.5 * nn * nn * t * t) / (nn * p * (1.0 - p) + nn * t / 3.0);
  b.bernstein = clipped_exp(std::numbers::ln2 - exponent);
  return b;
}

bool power_inequality_holds(double a, double b, int k) {
  if (!(b > 0.0) || !(a > b) || !std::isfinite(a)) throw domain_error("need a > b > 0");
  if (k < 1) throw domain_error("k must be a positive integer");
  // Compare sum_m a^{k-1-m} b^m with (a - b)^{k-1}; both sides share the
  // factor (a - b) > 0. a^{k-1} is one of the summands and the rest are >= 0.
  const double d = a - b;
  double a_pow = 1.0;
  double d_pow = 1.0;
  for (int m = 0; m < k - 1; ++m) {
    a_pow *= a;
    d_pow *= d;
  }
  double sum = a_pow;
  double b_pow = 1.0;
  for (int m = 1; m < k; ++m) {
    b_pow *= b;
    double term = b_pow;
    for (int r = 0; r < k - 1 - m; ++r) term *= a;
    sum += term;
  }
  return sum >= d_pow;
}

}  // namespace winf
