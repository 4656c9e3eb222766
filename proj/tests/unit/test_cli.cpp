#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "qh/cli.hpp"

using namespace qh;
using Catch::Approx;

namespace {

struct Outcome {
  int code = 0;
  std::string out, err;
  cli::Json json() const { return cli::Json::parse(out); }
};

Outcome run(std::vector<const char*> args) {
  args.insert(args.begin(), "qh");
  std::ostringstream out, err;
  Outcome o;
  o.code = cli::run(static_cast<int>(args.size()), args.data(), out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

std::string without_timing(const std::string& s) {
  return std::regex_replace(s, std::regex("\"timing\\.seconds\": [^,\\n]*"), "");
}

struct EnvGuard {
  const char* name;
  EnvGuard(const char* n, const char* v) : name(n) { setenv(n, v, 1); }
  ~EnvGuard() { unsetenv(name); }
};

}  // namespace

TEST_CASE("eval-v and eguchi-hanson examples", "[cli]") {
  auto r = run({"eval-v", "--betas", "1,1,0", "--c", "1", "--point", "0,0,2"});
  REQUIRE(r.code == 0);
  auto j = r.json();
  CHECK(j["results.V"].get<double>() == Approx(-1.0986122886).epsilon(1e-10));
  CHECK(j["results.H"].get<double>() == Approx(4.0).epsilon(1e-14));
  CHECK(j["results.Vhat"].get<double>() == Approx(-2.0 / 3.0).epsilon(1e-12));
  CHECK(j["version"] == cli::version);
  CHECK(j.contains("timing.seconds"));

  r = run({"eguchi-hanson", "--a", "1", "--point", "0,0,2"});
  REQUIRE(r.code == 0);
  j = r.json();
  CHECK(j["results.V"].get<double>() == Approx(-std::log(3.0)).epsilon(1e-14));
  CHECK(j["results.Vhat"].get<double>() == Approx(4.0 / 3.0).epsilon(1e-14));
  CHECK(j["checks.ellipsoid_residual.value"].get<double>() < 1e-12);
}

TEST_CASE("exit codes", "[cli]") {
  CHECK(run({}).code == 1);
  CHECK(run({"bogus"}).code == 1);
  CHECK(run({"eval-v", "--betas", "1,1,0", "--point", "0,0,2", "--nope"}).code == 1);
  CHECK(run({"eval-v", "--betas", "1,1,0", "--point", "0,0"}).code == 1);
  CHECK(run({"eval-v", "--point", "0,0,2"}).code == 1);
  CHECK(run({"twistor", "--kernel", "unknown", "--point", "1,0,0"}).code == 1);
  CHECK(run({"twistor", "--kernel-json", "{\"numerator\": 3}", "--point", "1,0,0"}).code == 1);
  CHECK(run({"--help"}).code == 0);

  const std::vector<const char*> lap = {"verify-laplace", "--betas", "0.9,0.35,-0.25", "--c", "1.3", "--point", "1,1,1"};
  CHECK(run(lap).code == 0);
  auto forced = lap;
  forced.insert(forced.end(), {"--check-tol", "1e-30"});
  const auto f = run(forced);
  CHECK(f.code == 2);
  CHECK(f.json()["checks.laplacian.pass"] == false);

  // a contour that encloses both roots is a reported contour error
  const auto c = run({"twistor", "--point", "0.5,0.5,1", "--contour-center", "0,0", "--contour-radius", "5"});
  CHECK(c.code == 2);
  CHECK(c.json()["error.kind"] == "contour");
  CHECK(run({"eguchi-hanson", "--a", "1", "--point", "0,0,1"}).json()["error.kind"] == "focal-set");
}

TEST_CASE("identical argv gives identical output apart from timing", "[cli]") {
  const std::vector<const char*> args = {"phi-monopole", "--point", "1,0.5,0.2", "--point", "-0.3,0.8,1.1"};
  const auto a = run(args), b = run(args);
  REQUIRE(a.code == 0);
  CHECK(without_timing(a.out) == without_timing(b.out));

  const std::vector<const char*> s = {"suite", "--quick", "--only", "1,9,12"};
  CHECK(without_timing(run(s).out) == without_timing(run(s).out));
}

TEST_CASE("flags override environment override defaults", "[cli]") {
  const std::vector<const char*> base = {"verify-laplace", "--betas", "1,1,0", "--point", "0.5,0.4,2"};
  CHECK(run(base).json()["inputs.fd_step"].get<double>() == 1e-3);
  {
    EnvGuard env("QH_FD_STEP", "2e-3");
    CHECK(run(base).json()["inputs.fd_step"].get<double>() == 2e-3);
    auto flagged = base;
    flagged.insert(flagged.end(), {"--fd-step", "5e-3"});
    CHECK(run(flagged).json()["inputs.fd_step"].get<double>() == 5e-3);
  }
  {
    EnvGuard env("QH_TOL_QUAD", "-1");
    CHECK(run(base).code == 1);
  }
  {
    EnvGuard env("QH_TOL_ODE", "1e-6");
    // loose ODE tolerance from the environment makes the invariant drift check fail
    CHECK(run({"euler-flow", "--w0", "1,2,3"}).code == 2);
    CHECK(run({"euler-flow", "--w0", "1,2,3", "--ode-tol", "1e-13"}).code == 0);
  }
}

TEST_CASE("CSV rows carry 17 significant digits", "[cli]") {
  const auto r = run({"euler-flow", "--w0", "1,1,1", "--s1", "0.5", "--samples", "3", "--output", "csv"});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  CHECK(line == "s,w1,w2,w3");
  std::vector<std::string> rows;
  while (std::getline(in, line)) rows.push_back(line);
  REQUIRE(rows.size() == 3);
  // w = 1/(1 - s) at s = 0.25
  CHECK(rows[1].rfind("0.25,", 0) == 0);
  const std::string mid = rows[1].substr(5, rows[1].find(',', 5) - 5);
  CHECK(std::stod(mid) == Approx(4.0 / 3.0).epsilon(1e-10));
  CHECK(mid.size() == 18);
  const std::string last = rows[2].substr(rows[2].rfind(',') + 1);
  CHECK(std::stod(last) == Approx(2.0).epsilon(1e-12));

  const auto kv = run({"eguchi-hanson", "--a", "1", "--point", "0,0,2", "--point", "0,0,3", "--output", "csv"});
  CHECK(kv.out.rfind("x1,x2,x3,V,Vhat,ellipsoid_residual,pipeline_V\n", 0) == 0);
}

TEST_CASE("twistor subcommands", "[cli]") {
  auto r = run({"twistor", "--kernel", "inv_mu", "--point", "0,0,2"});
  REQUIRE(r.code == 0);
  auto j = r.json();
  CHECK(j["results.value.im"].get<double>() == Approx(-std::numbers::pi / 2).epsilon(1e-12));
  CHECK(j["diagnostics.contour.orientation"] == "cw");

  r = run({"twistor", "--kernel", "inv_mu", "--transform", "dilation", "--point", "0,0,2"});
  CHECK(r.json()["results.value.im"].get<double>() == Approx(std::numbers::pi / 2).epsilon(1e-12));

  r = run({"twistor", "--kernel-json", R"({"name": "inv_mu_json", "numerator": [{"lambda": 0}], "mu_power": 1})",
           "--point", "0.3,1.2,-0.4"});
  REQUIRE(r.code == 0);
  CHECK(r.json()["results.value.im"].get<double>() ==
        Approx(-std::numbers::pi / Eigen::Vector3d(0.3, 1.2, -0.4).norm()).epsilon(1e-10));

  r = run({"phi-monopole", "--kernel", "mu_over_lambda", "--point", "0.4,0.2,1"});
  REQUIRE(r.code == 0);
  CHECK(r.json()["results.Vhat.im"].get<double>() == Approx(2.0 * std::numbers::pi).epsilon(1e-12));
}

TEST_CASE("curvature and nahm-check", "[cli]") {
  CHECK(run({"curvature", "--chart", "eh", "--point", "1.5,1,0.5,0.7"}).code == 0);
  CHECK(run({"curvature", "--chart", "sphere4", "--point", "1,1.1,0.3,0.9"}).code == 0);
  CHECK(run({"curvature", "--chart", "bgpp", "--w0", "1,2,3", "--point", "0.05,1,0.5,0.7"}).code == 0);
  CHECK(run({"curvature", "--chart", "eh", "--point", "0.5,1,0.5,0.7"}).json()["error.kind"] == "domain");
  CHECK(run({"nahm-check", "--flow", "flat"}).code == 0);
  CHECK(run({"nahm-check", "--flow", "general"}).code == 1);
}

TEST_CASE("suite --quick lists every criterion", "[cli]") {
  const auto r = run({"suite", "--quick"});
  CHECK(r.code == 0);
  const auto j = r.json();
  for (int id = 1; id <= 12; ++id) CHECK(j["criteria." + std::to_string(id) + ".pass"] == true);
  CHECK(j["results.passed"] == 12);
}
