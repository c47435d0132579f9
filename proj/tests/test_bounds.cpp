#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "doctest.h"
#include "winf/bounds.hpp"
#include "winf/error.hpp"

using namespace winf;

TEST_CASE("dkw tail") {
  CHECK(dkw_tail(100, 0.1) == doctest::Approx(2.0 * std::exp(-2.0)).epsilon(1e-14));
  CHECK(dkw_tail(100, 10.0) == 0.0);
  CHECK(dkw_tail(1, 0.01) == 1.0);
  CHECK_THROWS_AS(dkw_tail(1, 0.0), domain_error);
  CHECK_THROWS_AS(dkw_tail(1, -0.5), domain_error);
}

TEST_CASE("lower-bounded envelope") {
  const double base = thm1_envelope(1.0, 2, 2.0);
  CHECK(base == doctest::Approx(std::sqrt(std::log(4.0) / 4.0)).epsilon(1e-15));
  CHECK(base == doctest::Approx(0.5887).epsilon(1e-4));
  CHECK(thm1_envelope(1.0, 200, 2.0) == doctest::Approx(base / 10.0).epsilon(1e-14));
  CHECK(thm1_envelope(0.5, 2, 2.0) == doctest::Approx(2.0 * base).epsilon(1e-15));
  CHECK_THROWS_AS(thm1_envelope(1.0, 2, 1.0), domain_error);
  CHECK_THROWS_AS(thm1_envelope(0.0, 2, 2.0), domain_error);
}

TEST_CASE("zero-order rate") {
  const std::vector<int> one{1};
  CHECK(thm2_rate(1000, one, 1.0) ==
        doctest::Approx(std::pow(std::log(1000.0) / 1000.0, 0.25)).epsilon(1e-15));
  CHECK(thm2_rate(1000, one, 1.0) == doctest::Approx(0.2883).epsilon(1e-3));
  const std::vector<int> mixed{1, 3};
  const std::vector<int> three{3};
  CHECK(thm2_rate(1000, mixed, 1.0) == thm2_rate(1000, three, 1.0));
  CHECK(thm2_rate(1000, three, 1.0) > thm2_rate(1000, one, 1.0));
  const std::vector<int> zero{0};
  CHECK(thm2_rate(1000, zero, 2.0) == doctest::Approx(2.0 * std::sqrt(std::log(1000.0) / 1000.0)));
  CHECK_THROWS_AS(thm2_rate(1, one, 1.0), domain_error);
  CHECK_THROWS_AS(thm2_rate(10, std::vector<int>{}, 1.0), domain_error);
  for (int k = 0; k < 5; ++k) {
    const std::vector<int> ks{k};
    const std::vector<int> next{k + 1};
    for (std::size_t n = 3; n < 5000; n = n * 3 / 2 + 1) {
      CHECK(thm2_rate(n + 1, ks, 1.0) < thm2_rate(n, ks, 1.0));
      CHECK(thm2_rate(n, next, 1.0) > thm2_rate(n, ks, 1.0));
    }
  }
}

TEST_CASE("binomial tails") {
  const auto b = binomial_tails(100, 0.5, 0.1);
  CHECK(b.chernoff == doctest::Approx(2.0 * std::exp(-2.0)).epsilon(1e-14));
  CHECK(b.bernstein == doctest::Approx(2.0 * std::exp(-50.0 / (25.0 + 10.0 / 3.0))).epsilon(1e-14));
  CHECK(b.chebyshev == doctest::Approx(0.25));
  CHECK(b.chernoff == dkw_tail(100, 0.1));
  const auto huge = binomial_tails(100, 0.5, 50.0);
  CHECK(huge.chebyshev <= 1.0);
  CHECK(huge.chernoff <= 1.0);
  CHECK(huge.bernstein <= 1.0);
  CHECK_THROWS_AS(binomial_tails(100, 0.0, 0.1), domain_error);
  CHECK_THROWS_AS(binomial_tails(100, 1.0, 0.1), domain_error);
}

TEST_CASE("bernstein below chebyshev where the exponential has kicked in") {
  // For p = 1/2 the ordering fails on roughly 0.25 < n t^2 < 1.1, where the
  // factor 2 in front of the exponential still dominates.
  for (std::size_t n : {30u, 100u, 1000u, 10000u}) {
    for (double t = 0.001; t < 0.5; t *= 1.3) {
      const double nt2 = static_cast<double>(n) * t * t;
      if (nt2 > 0.25 && nt2 < 2.0) continue;
      const auto b = binomial_tails(n, 0.5, t);
      CHECK(b.bernstein <= b.chebyshev);
    }
  }
}

TEST_CASE("chebyshev normalizations agree") {
  for (std::size_t n : {10u, 1000u}) {
    for (double p : {0.1, 0.5, 0.8}) {
      for (double t : {0.01, 0.05, 0.2}) {
        const double u = chebyshev_deviation_to_normalized(n, p, t);
        const double plain = std::min(1.0, p * (1 - p) / (static_cast<double>(n) * t * t));
        CHECK(chebyshev_normalized(u) == doctest::Approx(plain).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("power inequality examples") {
  CHECK(power_inequality_holds(2.0, 1.0, 3));
  CHECK(power_inequality_holds(1.0 + 1e-6, 1.0, 2));
  CHECK(power_inequality_holds(5.0, 3.0, 1));
  CHECK_THROWS_AS(power_inequality_holds(1.0, 2.0, 2), domain_error);
  CHECK_THROWS_AS(power_inequality_holds(2.0, 0.0, 2), domain_error);
  CHECK_THROWS_AS(power_inequality_holds(2.0, 1.0, 0), domain_error);
}

TEST_CASE("power inequality agrees with exact integer arithmetic") {
  for (std::int64_t a = 2; a <= 40; ++a) {
    for (std::int64_t b = 1; b < a; ++b) {
      for (int k = 1; k <= 10; ++k) {
        std::int64_t ak = 1;
        std::int64_t bk = 1;
        std::int64_t dk = 1;
        for (int i = 0; i < k; ++i) {
          ak *= a;
          bk *= b;
          dk *= a - b;
        }
        CHECK(power_inequality_holds(static_cast<double>(a), static_cast<double>(b), k) ==
              (ak - bk >= dk));
      }
    }
  }
}

TEST_CASE("power inequality on random inputs") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(1e-3, 10.0);
  std::uniform_int_distribution<int> kd(1, 20);
  int failures = 0;
  for (int i = 0; i < 20000; ++i) {
    double a = u(rng);
    double b = u(rng);
    if (a == b) continue;
    if (a < b) std::swap(a, b);
    failures += !power_inequality_holds(a, b, kd(rng));
  }
  CHECK(failures == 0);
}

TEST_CASE("envelope parameter validation") {
  EnvelopeParams p;
  p.n = 10;
  p.t = 0.1;
  p.lambda = 1.0;
  p.M = 10.0;
  CHECK_NOTHROW(p.validate());
  p.M = 1.0;
  CHECK_THROWS_AS(p.validate(), domain_error);
}
