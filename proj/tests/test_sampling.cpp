#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "doctest.h"
#include "support.hpp"
#include "winf/error.hpp"
#include "winf/sampling.hpp"

using namespace winf;
using testing::evaluator;

TEST_CASE("mix_seed is deterministic and separates streams") {
  CHECK(mix_seed(42, 7) == mix_seed(42, 7));
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 10000; ++s) seen.insert(mix_seed(42, s));
  CHECK(seen.size() == 10000);
  CHECK(mix_seed(1, 0) != mix_seed(2, 0));
}

TEST_CASE("draws are reproducible") {
  const auto U = evaluator("uniform");
  const auto a = draw_samples(U, 3, {5, 1});
  const auto b = draw_samples(U, 3, {5, 1});
  REQUIRE(a.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(a[i] == b[i]);
  CHECK(a.seed() == mix_seed(5, 1));
  const auto c = draw_samples(U, 3, {5, 2});
  CHECK_FALSE((a[0] == c[0] && a[1] == c[1] && a[2] == c[2]));
}

TEST_CASE("tent draws are sorted and inside the open interval") {
  const auto T = evaluator("tent");
  const auto em = draw_samples(T, 10000, {9, 0});
  CHECK(em.size() == 10000);
  CHECK(std::is_sorted(em.samples().begin(), em.samples().end()));
  CHECK(em[0] > 0.0);
  CHECK(em[em.size() - 1] < 1.0);
  CHECK(em.model_id() == "tent");
}

TEST_CASE("uniform sample mean") {
  const auto em = draw_samples(evaluator("uniform"), 100000, {3, 0});
  const auto s = em.samples();
  const double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
  CHECK(std::abs(mean - 0.5) <= 0.01);
}

TEST_CASE("probability integral transform is uniform") {
  const auto T = evaluator("tent");
  const auto em = draw_samples(T, 4000, {17, 0});
  std::vector<double> u;
  for (double x : em.samples()) u.push_back(T.cdf(x));
  const EmpiricalMeasure pit(u);
  // 1% critical value of the one-sample KS statistic.
  CHECK(ks_statistic(pit, evaluator("uniform")) <= 1.63 / std::sqrt(4000.0));
}

TEST_CASE("n = 0 is rejected") {
  CHECK_THROWS_AS(draw_samples(evaluator("uniform"), 0, {1, 0}), domain_error);
  CHECK_THROWS_AS(EmpiricalMeasure({}), domain_error);
  CHECK_THROWS_AS(EmpiricalMeasure({0.0, 0.5}), domain_error);
  CHECK_THROWS_AS(EmpiricalMeasure({0.5, 1.0}), domain_error);
}

TEST_CASE("empirical quantile examples") {
  CHECK(empirical_quantile(EmpiricalMeasure({0.4}), 0.7) == 0.4);
  const EmpiricalMeasure two({0.9, 0.2});
  CHECK(empirical_quantile(two, 0.5) == 0.2);
  CHECK(empirical_quantile(two, 0.51) == 0.9);
  const EmpiricalMeasure four({0.1, 0.2, 0.3, 0.4});
  CHECK(empirical_quantile(four, 0.75) == 0.3);
  CHECK(empirical_quantile(four, 1.0) == 0.4);
  CHECK_THROWS_AS(empirical_quantile(four, 0.0), domain_error);
  CHECK_THROWS_AS(empirical_quantile(four, 1.01), domain_error);
}

TEST_CASE("ks statistic examples") {
  const auto U = evaluator("uniform");
  CHECK(ks_statistic(EmpiricalMeasure({0.5}), U) == doctest::Approx(0.5));
  CHECK(ks_statistic(EmpiricalMeasure({0.999}), U) == doctest::Approx(0.999));
  for (std::size_t n : {1u, 4u, 17u, 100u}) {
    std::vector<double> mids;
    for (std::size_t i = 1; i <= n; ++i) mids.push_back((2.0 * i - 1.0) / (2.0 * n));
    CHECK(ks_statistic(EmpiricalMeasure(mids), U) == doctest::Approx(1.0 / (2.0 * n)).epsilon(1e-12));
  }
}

TEST_CASE("ks statistic matches enumeration of jump points") {
  const auto T = evaluator("tent");
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto em = draw_samples(T, 1 + seed * 3, {seed, 0});
    const auto n = static_cast<double>(em.size());
    double oracle = 0.0;
    for (std::size_t i = 0; i < em.size(); ++i) {
      const double f = testing::tent_cdf(em[i]);
      oracle = std::max({oracle, std::abs((i + 1) / n - f), std::abs(i / n - f)});
    }
    CHECK(ks_statistic(em, T) == doctest::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("counting helpers") {
  const EmpiricalMeasure em({0.1, 0.2, 0.2, 0.7});
  CHECK(em.count_below(0.2) == 1);
  CHECK(em.count_in(0.2, 0.7) == 2);
  CHECK(em.cdf(0.2) == doctest::Approx(0.75));
}

TEST_CASE("samples CSV") {
  const auto U = evaluator("uniform");
  std::vector<EmpiricalMeasure> batches{draw_samples(U, 2, {1, 0}), draw_samples(U, 2, {1, 1})};
  std::ostringstream out;
  write_samples_csv(out, batches);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "trial,index,value");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4);
  CHECK(out.str().find("1,2,") != std::string::npos);
}
