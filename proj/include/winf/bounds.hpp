#pragma once

#include <cstddef>
#include <span>

namespace winf {

// Closed-form concentration and rate envelopes. All tails are evaluated in
// log space and clipped to [0, 1].

struct EnvelopeParams {
  std::size_t n = 1;
  double t = 0.0;
  double lambda = 0.0;
  double M = 0.0;
  double p = 0.5;
  double rate_constant = 1.0;

  // Throws domain_error unless every field is positive, M > 1 and 0 < p < 1.
  void validate() const;
};

// P(sup_x |F_n - F| >= t) <= 2 exp(-2 n t^2).
double dkw_tail(std::size_t n, double t);

// (1/lambda) * sqrt(log(2M) / (2n)); exceeded with probability at most 1/M
// when rho >= lambda.
double thm1_envelope(double lambda, std::size_t n, double M);

// C * max_i (log n / n)^{1 / (2 (k_i + 1))}.
double thm2_rate(std::size_t n, std::span<const int> orders, double C);

// Three bounds on P(|S_n/n - p| >= t) for S_n ~ Bin(n, p).
struct BinomialTails {
  double chebyshev = 1.0;  // p (1 - p) / (n t^2)
  double chernoff = 1.0;   // 2 exp(-2 n t^2)
  double bernstein = 1.0;  // 2 exp(-(n^2 t^2 / 2) / (n p (1 - p) + n t / 3))
};

BinomialTails binomial_tails(std::size_t n, double p, double t);

// Chebyshev in the normalized form P(|S_n - np| / sqrt(np(1-p)) >= u) <= 1/u^2.
// The plain form above is this bound at u = t sqrt(n) / sqrt(p (1 - p)).
double chebyshev_normalized(double u);
double chebyshev_deviation_to_normalized(std::size_t n, double p, double t);

// a^k - b^k >= (a - b)^k for a > b > 0 and integer k >= 1. Evaluated through
// the factorization a^k - b^k = (a - b) sum_m a^{k-1-m} b^m so rounding cannot
// flip the comparison.
bool power_inequality_holds(double a, double b, int k);

}  // namespace winf
