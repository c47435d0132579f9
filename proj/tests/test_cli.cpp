#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "support.hpp"
#include "winf/cli.hpp"

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "winf");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = winf::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("distance prints a report and is byte-identical across runs") {
  const auto a = run({"distance", "--density", testing::model_path("tent"), "--n", "1024", "--seed", "7"});
  REQUIRE(a.code == 0);
  const auto j = nlohmann::json::parse(a.out);
  CHECK(j["n"] == 1024);
  CHECK(j.contains("w_infinity"));
  CHECK(j.contains("w_one"));
  CHECK(j.contains("argmax_index"));
  CHECK(j.contains("argmax_endpoint"));
  const auto b = run({"distance", "--density", testing::model_path("tent"), "--n", "1024", "--seed", "7"});
  CHECK(a.out == b.out);
}

TEST_CASE("missing config names the path") {
  const auto r = run({"rate-experiment", "--config", "missing.cfg"});
  CHECK(r.code == 1);
  CHECK(r.err.find("winf-error: io:") != std::string::npos);
  CHECK(r.err.find("missing.cfg") != std::string::npos);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({}).code == 2);
  CHECK(run({"distance", "--density", testing::model_path("tent"), "--bogus"}).code == 2);
  CHECK(run({"distance"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("library errors exit with 1") {
  const auto gap = run({"distance", "--density", testing::model_path("gap"), "--n", "10"});
  CHECK(gap.code == 1);
  CHECK(gap.err.find("winf-error: assumption:") != std::string::npos);
  const auto cert = run({"transport-cert", "--density", testing::model_path("gap"), "--n", "101",
                         "--force-accept"});
  CHECK(cert.code == 1);
  CHECK(cert.err.find("winf-error: certification:") != std::string::npos);
  const auto beta = run({"transport-cert", "--density", testing::model_path("tent"), "--beta", "2"});
  CHECK(beta.code == 1);
  CHECK(beta.err.find("winf-error: domain:") != std::string::npos);
}

TEST_CASE("other subcommands") {
  const auto v = run({"validate-density", "--density", testing::model_path("tent")});
  CHECK(v.code == 0);
  CHECK(nlohmann::json::parse(v.out)["bounded_zero_regime"] == true);

  const auto b = run({"bound-table", "--n", "100", "--t", "0.1", "0.2"});
  CHECK(b.code == 0);
  CHECK(b.out.rfind("n,t,dkw,chernoff,bernstein,chebyshev\n", 0) == 0);
  CHECK(b.out.find("100,0.10000000000000001,0.2706705664732254") != std::string::npos);

  const auto s = run({"sample", "--density", testing::model_path("uniform"), "--n", "5", "--trials", "2"});
  CHECK(s.code == 0);
  CHECK(std::count(s.out.begin(), s.out.end(), '\n') == 11);

  const auto c = run({"transport-cert", "--density", testing::model_path("tent"), "--n", "512", "--seed", "3"});
  CHECK(c.code == 0);
  const auto j = nlohmann::json::parse(c.out);
  CHECK(j["certificate"]["max_displacement"].get<double>() >=
        j["certificate"]["exact_winf"].get<double>());
}
