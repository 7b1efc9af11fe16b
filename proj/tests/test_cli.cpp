#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>

#include "sfcca/io.hpp"
#include "test_util.hpp"

using namespace sfcca;
namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "sfcca_test_cli";

int run(const std::string& args) {
  const std::string cmd = std::string(SFCCA_CLI_PATH) + " " + args + " > " + (kDir / "stdout.txt").string() + " 2> " +
                          (kDir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string file(const std::string& name) { return io::read_file(kDir / name); }

std::string p(const std::string& name) { return (kDir / name).string(); }

const std::string kSim = "--p 12 --support-size 4 --n 80 --n-test 200 --grid-size 10";

struct Fixture {
  Fixture() {
    fs::remove_all(kDir);
    fs::create_directories(kDir);
  }
  ~Fixture() { fs::remove_all(kDir); }
};

}  // namespace

TEST_CASE_FIXTURE(Fixture, "simulate is deterministic in its seed") {
  REQUIRE(run("simulate --seed 7 " + kSim + " --out-dir " + p("a")) == 0);
  REQUIRE(run("simulate --seed 7 " + kSim + " --out-dir " + p("b")) == 0);
  REQUIRE(run("simulate --seed 8 " + kSim + " --out-dir " + p("c")) == 0);
  for (const char* f : {"curves.csv", "covariates.csv", "truth.json", "test_curves.csv", "test_covariates.csv"}) {
    CHECK(file(std::string("a/") + f) == file(std::string("b/") + f));
  }
  CHECK(file("a/curves.csv") != file("c/curves.csv"));
  const auto ds = io::load_dataset(kDir / "a/curves.csv", kDir / "a/covariates.csv");
  CHECK(ds.curves.size() == 80);
  CHECK(ds.x.cols() == 12);
}

TEST_CASE_FIXTURE(Fixture, "fit with lambda 0 matches classical CCA") {
  REQUIRE(run("simulate --seed 3 " + kSim + " --out-dir " + p("s")) == 0);
  REQUIRE(run("fit --curves " + p("s/curves.csv") + " --covariates " + p("s/covariates.csv") +
              " -d 3 --lambda 0 --output " + p("m.json")) == 0);
  const auto art = io::model_from_json(io::json::parse(file("m.json")));
  const auto ds = io::load_dataset(kDir / "s/curves.csv", kDir / "s/covariates.csv");
  const auto pca = rfpca_fit(ds.curves, 3);
  const CCAModel oracle = classical_cca(pca.scores, ds.x);
  REQUIRE(art.cca().correlations.size() == oracle.correlations.size());
  CHECK(testing::max_abs(art.cca().correlations - oracle.correlations) <= 1e-8);
  const std::string out = file("stdout.txt");
  CHECK(out.find("lambda: 0") != std::string::npos);
  CHECK(out.find("canonical pairs: 3") != std::string::npos);

  SUBCASE("fit is byte-identical across runs") {
    REQUIRE(run("fit --curves " + p("s/curves.csv") + " --covariates " + p("s/covariates.csv") +
                " -d 3 --lambda 0 --output " + p("m2.json")) == 0);
    CHECK(file("m.json") == file("m2.json"));
  }
}

TEST_CASE_FIXTURE(Fixture, "simulate, fit, evaluate and mode") {
  REQUIRE(run("simulate --seed 5 " + kSim + " --out-dir " + p("s")) == 0);
  const std::string data = " --curves " + p("s/curves.csv") + " --covariates " + p("s/covariates.csv");
  const std::string test = " --curves " + p("s/test_curves.csv") + " --covariates " + p("s/test_covariates.csv");
  REQUIRE(run("fit" + data + " -d 3 --folds 5 --seed 1 --output " + p("m.json")) == 0);
  REQUIRE(run("evaluate --model " + p("m.json") + " --truth " + p("s/truth.json") + test + " --output " +
              p("metrics.csv")) == 0);
  const std::string metrics = file("metrics.csv");
  CHECK(metrics.rfind("metric,value\n", 0) == 0);
  for (const char* name : {"A_norm_error", "B_f1", "C_pt_error", "D_tangent_corr", "E_euclid_corr"}) {
    CHECK(metrics.find(std::string("\n") + name + ",") != std::string::npos);
  }
  REQUIRE(run("mode --model " + p("m.json") + " --k 1 --c 1.5 --output " + p("mode.csv")) == 0);
  const auto modes = io::parse_curves(file("mode.csv"));
  CHECK(modes.ids == std::vector<std::string>{"mean", "minus", "plus"});

  REQUIRE(run("fit" + data + " -d 3 --method euclidean --lambda 0.01 --output " + p("e.json")) == 0);
  REQUIRE(run("evaluate --model " + p("e.json") + " --truth " + p("s/truth.json") + test + " --output " +
              p("emetrics.csv")) == 0);
  CHECK(file("emetrics.csv").find("E_euclid_corr,") != std::string::npos);

  REQUIRE(run("cv" + data + " --rank-grid 2,3 --lambda-grid 0.1,0.01 --output " + p("cv.csv") + " --model-output " +
              p("cvm.json")) == 0);
  const std::string cv = file("cv.csv");
  CHECK(cv.rfind("d,lambda,error_mean,error_sd,cv_corr1", 0) == 0);
  CHECK(std::count(cv.begin(), cv.end(), '\n') == 5);
  CHECK(fs::exists(kDir / "cvm.json"));
}

TEST_CASE_FIXTURE(Fixture, "trials command") {
  REQUIRE(run("trials --seed 2 --p 12 --support-size 4 --grid-size 10 --n-list 100 --trials 1 --n-test 100 --output " +
              p("t.csv")) == 0);
  const std::string t = file("t.csv");
  CHECK(t.rfind("method,N,trial,metric,value\n", 0) == 0);
  CHECK(t.find("riemannian,100,0,A_norm_error,") != std::string::npos);
}

TEST_CASE_FIXTURE(Fixture, "exit codes") {
  CHECK(run("--help") == 0);
  CHECK(run("fit --help") == 0);
  CHECK(run("") == 1);
  CHECK(run("nonsense") == 1);
  CHECK(run("fit --curves " + p("missing.csv") + " --covariates " + p("missing2.csv")) == 1);
  CHECK(file("stderr.txt").find("missing.csv") != std::string::npos);

  io::write_file(kDir / "bad.csv", "subject,t,c11,c12,c22\na,0,1,2,1\na,1,1,0,1\n");
  io::write_file(kDir / "x.csv", "subject,x1\na,1\n");
  CHECK(run("fit --curves " + p("bad.csv") + " --covariates " + p("x.csv")) == 1);
  CHECK(file("stderr.txt").find("line 2") != std::string::npos);

  REQUIRE(run("simulate --seed 1 " + kSim + " --out-dir " + p("s")) == 0);
  const std::string data = " --curves " + p("s/curves.csv") + " --covariates " + p("s/covariates.csv");
  CHECK(run("fit" + data + " -d 0 --lambda 0.1") == 1);
  CHECK(run("fit" + data + " --lambda 0.1 --lambda-grid 0.1,0.2") == 1);
  CHECK(run("fit" + data + " --method other") == 1);
  CHECK(run("simulate --p 5 --support-size 10 --out-dir " + p("z")) == 1);

  std::ostringstream same;
  same << "subject,t,c11,c12,c22\n";
  std::ostringstream xs;
  xs << "subject,x1,x2\n";
  for (int i = 0; i < 10; ++i) {
    same << "s" << i << ",0,2,0.5,1\ns" << i << ",1,2,0.5,1\n";
    xs << "s" << i << "," << i << "," << (i * i) % 7 << "\n";
  }
  io::write_file(kDir / "same.csv", same.str());
  io::write_file(kDir / "same_x.csv", xs.str());
  CHECK(run("fit --curves " + p("same.csv") + " --covariates " + p("same_x.csv") + " -d 1 --lambda 0.1 --output " +
            p("n.json")) == 2);
}
