#include <cmath>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "winf/error.hpp"
#include "winf/sampling.hpp"
#include "winf/transport.hpp"

using namespace winf;
using testing::evaluator;

TEST_CASE("winf examples on the uniform model") {
  const auto U = evaluator("uniform");
  const auto one = winf_empirical(U, EmpiricalMeasure({0.3}));
  CHECK(one.w_infinity == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(one.argmax_index == 1);
  CHECK(one.argmax_endpoint == CellEndpoint::right);
  CHECK(winf_empirical(U, EmpiricalMeasure({0.25, 0.75})).w_infinity == doctest::Approx(0.25));
}

TEST_CASE("gap model: an unbalanced sample pays the gap width") {
  const auto G = evaluator("gap", true);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto em = draw_samples(G, 11, {seed, 0});
    CHECK(em.count_in(0.0, 1.0 / 3.0) * 2 != em.size());
    CHECK(winf_empirical(G, em).w_infinity >= 1.0 / 3.0 - 1e-9);
  }
}

TEST_CASE("winf matches the image-grid oracle on small samples") {
  const auto T = evaluator("tent");
  const std::size_t N = 200000;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto em = draw_samples(T, 1 + seed % 8, {seed, 3});
    const std::vector<double> xs(em.samples().begin(), em.samples().end());
    const double brute = testing::winf_by_grid(xs, testing::tent_cdf, N);
    CHECK(std::abs(winf_empirical(T, em).w_infinity - brute) <= 1.0 / N);
  }
}

TEST_CASE("w1 examples") {
  const auto U = evaluator("uniform");
  CHECK(w1_empirical(U, EmpiricalMeasure({0.5})) == doctest::Approx(0.25).epsilon(1e-14));
  for (double x : {0.1, 0.37, 0.9}) {
    CHECK(w1_empirical(U, EmpiricalMeasure({x})) ==
          doctest::Approx(x * x / 2 + (1 - x) * (1 - x) / 2).epsilon(1e-13));
  }
  for (std::size_t n : {1u, 3u, 10u, 64u}) {
    std::vector<double> mids;
    for (std::size_t i = 1; i <= n; ++i) mids.push_back((2.0 * i - 1.0) / (2.0 * n));
    CHECK(w1_empirical(U, EmpiricalMeasure(mids)) == doctest::Approx(1.0 / (4.0 * n)).epsilon(1e-12));
  }
}

TEST_CASE("w1 matches a Riemann sum of |F - F_n|") {
  const auto T = evaluator("tent");
  const auto M = evaluator("mixed");
  for (const auto* F : {&T, &M}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto em = draw_samples(*F, 25, {seed, 8});
      const int steps = 2000000;
      double riemann = 0.0;
      for (int s = 0; s < steps; ++s) {
        const double x = (s + 0.5) / steps;
        riemann += std::abs(F->cdf(x) - em.cdf(x));
      }
      riemann /= steps;
      CHECK(std::abs(w1_empirical(*F, em) - riemann) <= 1e-6);
    }
  }
}

TEST_CASE("w1 never exceeds winf and winf never exceeds 1") {
  for (const char* name : {"uniform", "tent", "quadratic", "inv_sqrt", "mixed"}) {
    const auto F = evaluator(name);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto r = measure_distances(F, draw_samples(F, 1 + 37 * seed, {seed, 1}));
      REQUIRE(r.w_one.has_value());
      CHECK(*r.w_one <= r.w_infinity + 1e-15);
      CHECK(r.w_infinity <= 1.0);
    }
  }
}

TEST_CASE("a shared quantile grid gives the same answer") {
  const auto T = evaluator("tent");
  const QuantileGrid grid(T, 500);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto em = draw_samples(T, 500, {seed, 0});
    CHECK(winf_empirical(grid, em).w_infinity == winf_empirical(T, em).w_infinity);
  }
  CHECK_THROWS_AS(winf_empirical(grid, draw_samples(T, 10, {0, 0})), domain_error);
}

TEST_CASE("bottleneck examples") {
  const std::vector<double> a{0.1, 0.9};
  const std::vector<double> b{0.2, 0.8};
  CHECK(winf_discrete(a, a) == 0.0);
  CHECK(winf_discrete(a, b) == doctest::Approx(0.1));
  CHECK_THROWS_AS(winf_discrete(a, std::vector<double>{0.5}), domain_error);
  CHECK_THROWS_AS(winf_discrete(std::vector<double>{0.9, 0.1}, b), domain_error);
}

TEST_CASE("bottleneck equals the best permutation") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 6;
    std::vector<double> xs(n);
    std::vector<double> ys(n);
    for (auto& x : xs) x = u(rng);
    for (auto& y : ys) y = u(rng);
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    CHECK(winf_discrete(xs, ys) == testing::bottleneck_by_permutation(xs, ys));
  }
}

TEST_CASE("distance report JSON") {
  const auto j = to_json(measure_distances(evaluator("uniform"), EmpiricalMeasure({0.3})));
  CHECK(j["n"] == 1);
  CHECK(j["w_infinity"].get<double>() == doctest::Approx(0.7));
  CHECK(j["w_one"].get<double>() == doctest::Approx(0.29));
  CHECK(j["argmax_index"] == 1);
  CHECK(j["argmax_endpoint"] == "right");
}
