#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "geor2/csvio.hpp"
#include "oracles.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kCli = GEOR2_CLI;
const std::string kFast = " --burn-in 400 --thin 2 --samples 300";

int run(const std::string& args, const std::string& log) {
  const std::string cmd = "\"" + kCli + "\" " + args + " > \"" + log + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return status == 0 ? 0 : 1;
}

std::string slurp(const std::string& path) { return geor2::read_file(path); }

json load(const std::string& path) { return json::parse(slurp(path)); }

// Liberia-like layout in kilometres: planar trend on the coordinates.
std::string simulate_demo(const std::string& dir, int seed) {
  const std::string args = "simulate --n 60 --bbox 200,500,600,900 --beta=-6.327,0.002761,0.004784"
                           " --sigma2 0.145 --phi 68.526 --trend planar --m-range 30,60 --seed " +
                           std::to_string(seed) + " --out-dir " + dir;
  REQUIRE(run(args, dir + "/sim.log") == 0);
  return dir + "/data.csv";
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("demo pipeline emits every report file") {
  const std::string dir = oracle::temp_dir("cli_demo");
  const std::string data = simulate_demo(dir, 11);
  CHECK(fs::exists(dir + "/truth.json"));
  CHECK(run("fit --data " + data + " --covariates trend_x1,trend_x2 --seed 3 --max-updates 2" + kFast +
                " --out " + dir + "/with.json", dir + "/fit1.log") == 0);
  CHECK(run("fit --data " + data + " --seed 3 --max-updates 2" + kFast + " --out " + dir + "/without.json",
            dir + "/fit0.log") == 0);
  CHECK(run("r2 --data " + data + " --artifact " + dir + "/with.json --artifact-without " + dir +
                "/without.json --seed 5" + kFast + " --out-dir " + dir, dir + "/r2.log") == 0);
  CHECK(run("se-compare --data " + data + " --artifact-with " + dir + "/with.json --artifact-without " + dir +
                "/without.json --seed 5" + kFast + " --out-dir " + dir, dir + "/se.log") == 0);
  for (const char* f : {"r2_report.json", "r2_report.csv", "se_compare.csv", "prevalence_points.csv",
                        "se_compare_run.json"})
    CHECK(fs::exists(dir + "/" + f));
  const json r2 = load(dir + "/r2_report.json");
  CHECK(r2["r2_glgm"].get<double>() <= 1.0);
  CHECK(r2["partial_r2"].is_number());
  CHECK(r2["seed"] == 5);
  CHECK(r2["config_hash"].get<std::string>().size() == 16);
  const json artifact = load(dir + "/with.json");
  CHECK(artifact["method"] == "mcml");
  CHECK(artifact["estimates"].size() == 5);
  std::istringstream se(slurp(dir + "/se_compare.csv"));
  std::string header;
  std::getline(se, header);
  CHECK(header == "site_id,x1,x2,se_without,se_with,rel_reduction");
}

TEST_CASE("gaussian fit and r2 reduce to least squares") {
  const std::string dir = oracle::temp_dir("cli_gauss");
  REQUIRE(run("simulate --family gaussian --n 50 --bbox 0,0,400,400 --beta=1,0.5 --sigma2 0.5 --phi 80"
              " --tau2 0.3 --trend normal --normal-covariates 1 --seed 21 --out-dir " + dir, dir + "/s.log") == 0);
  REQUIRE(run("fit --family gaussian --data " + dir + "/data.csv --covariates z1 --out " + dir + "/g.json",
              dir + "/f.log") == 0);
  REQUIRE(run("r2 --data " + dir + "/data.csv --artifact " + dir + "/g.json --out-dir " + dir, dir + "/r.log") == 0);
  const geor2::Dataset d = geor2::read_dataset_csv(dir + "/data.csv", {"z1"});
  const oracle::Ols ols = oracle::least_squares(d.design, d.y);
  const json r2 = load(dir + "/r2_report.json");
  CHECK(std::abs(r2["r2_glm"].get<double>() - (1.0 - ols.rss / ols.tss)) < 1e-8);
  CHECK(r2["r2_glgm_mc_se"] == 0.0);
  CHECK(load(dir + "/g.json")["method"] == "linear_ml");
}

TEST_CASE("intercept-only artifact against itself") {
  const std::string dir = oracle::temp_dir("cli_self");
  const std::string data = simulate_demo(dir, 12);
  REQUIRE(run("fit --data " + data + " --seed 1 --max-updates 1" + kFast + " --out " + dir + "/a.json",
              dir + "/f.log") == 0);
  REQUIRE(run("r2 --data " + data + " --artifact " + dir + "/a.json --artifact-without " + dir +
                  "/a.json --seed 9" + kFast + " --out-dir " + dir, dir + "/r.log") == 0);
  const json r2 = load(dir + "/r2_report.json");
  CHECK(std::abs(r2["partial_r2"].get<double>()) <= 3.0 * r2["partial_r2_mc_se"].get<double>());
}

TEST_CASE("reruns reproduce every file byte for byte") {
  const std::string a = oracle::temp_dir("cli_rep_a");
  const std::string b = oracle::temp_dir("cli_rep_b");
  for (const std::string& dir : {a, b}) {
    const std::string data = simulate_demo(dir, 13);
    REQUIRE(run("fit --data " + data + " --covariates trend_x1,trend_x2 --seed 2 --max-updates 1" + kFast +
                    " --out " + dir + "/with.json", dir + "/f1.log") == 0);
    REQUIRE(run("fit --data " + data + " --seed 2 --max-updates 1" + kFast + " --out " + dir + "/without.json",
                dir + "/f0.log") == 0);
    REQUIRE(run("r2 --data " + data + " --artifact " + dir + "/with.json --artifact-without " + dir +
                    "/without.json --seed 4" + kFast + " --out-dir " + dir, dir + "/r.log") == 0);
    REQUIRE(run("se-compare --data " + data + " --artifact-with " + dir + "/with.json --artifact-without " +
                    dir + "/without.json --seed 4" + kFast + " --out-dir " + dir, dir + "/s.log") == 0);
  }
  for (const char* f : {"data.csv", "truth.json", "with.json", "without.json", "r2_report.json",
                        "r2_report.csv", "se_compare.csv", "prevalence_points.csv", "se_compare_run.json"})
    CHECK_MESSAGE(slurp(a + "/" + f) == slurp(b + "/" + f), f);
}

TEST_CASE("refusals") {
  const std::string dir = oracle::temp_dir("cli_err");
  const std::string data = simulate_demo(dir, 14);
  SUBCASE("missing seed") {
    CHECK(run("fit --data " + data + kFast + " --out " + dir + "/x.json", dir + "/e.log") != 0);
    CHECK(slurp(dir + "/e.log").find("--seed") != std::string::npos);
    CHECK(run("simulate --beta=0 --out-dir " + dir + "/s", dir + "/e2.log") != 0);
  }
  SUBCASE("longitude/latitude coordinates") {
    std::ofstream(dir + "/lonlat.csv") << "id,x1,x2,m,y\na,-9.5,6.3,10,2\nb,-10.1,7.0,10,5\nc,-8.2,5.1,10,1\n"
                                          "d,-9.0,6.0,10,3\n";
    CHECK(run("fit --family binomial --data " + dir + "/lonlat.csv --seed 1" + kFast + " --max-updates 1 --out " +
                  dir + "/ll.json", dir + "/ll.log") != 0);
    CHECK(slurp(dir + "/ll.log").find("--force-planar") != std::string::npos);
    CHECK(run("fit --family binomial --data " + dir + "/lonlat.csv --seed 1" + kFast +
                  " --max-updates 1 --force-planar --out " + dir + "/ll.json", dir + "/ll2.log") == 0);
  }
  SUBCASE("poisson fitting is not offered") {
    CHECK(run("fit --family poisson --data " + data + " --seed 1 --out " + dir + "/p.json", dir + "/p.log") != 0);
  }
  SUBCASE("artifact fitted to other data") {
    REQUIRE(run("fit --data " + data + " --seed 1 --max-updates 1" + kFast + " --out " + dir + "/a.json",
                dir + "/a.log") == 0);
    const std::string other = oracle::temp_dir("cli_err_other");
    const std::string data2 = simulate_demo(other, 15);
    CHECK(run("r2 --data " + data2 + " --artifact " + dir + "/a.json --seed 1" + kFast + " --out-dir " + other,
              dir + "/m.log") != 0);
    CHECK(slurp(dir + "/m.log").find("different data") != std::string::npos);
  }
  SUBCASE("schema error carries the line") {
    std::ofstream(dir + "/bad.csv") << "id,x1,x2,m,y\na,300,600,10,2\nb,310,640,,5\n";
    CHECK(run("fit --data " + dir + "/bad.csv --seed 1 --out " + dir + "/b.json", dir + "/b.log") != 0);
    CHECK(slurp(dir + "/b.log").find("bad.csv:3: missing value in column 'm'") != std::string::npos);
  }
}

}  // TEST_SUITE
