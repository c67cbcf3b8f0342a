#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "fixtures.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("gfdpf_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Result run(const std::string& args) {
    const fs::path out = dir_ / "stdout", err = dir_ / "stderr";
    const std::string cmd = std::string(GFDPF_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
};

const std::string c118 = oracle::data("case118.m");
const std::string c14 = oracle::data("case14.m");
const std::string m118 = oracle::data("case118_4area.areas");
const std::string m14 = oracle::data("case14_4area.areas");

}  // namespace

TEST_F(Cli, SolveIeee118) {
  const Result r = run("solve " + c118 + " --tol 1e-3 --threads 1 --format json");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = gfdpf::json::parse(r.out);
  EXPECT_EQ(j["solution"]["buses"].size(), 118u);
  EXPECT_TRUE(j["solution"]["converged"].get<bool>());
}

TEST_F(Cli, SolveTextReport) {
  const Result r = run("solve " + c14 + " --threads 1");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("converged: yes"), std::string::npos);
}

TEST_F(Cli, MissingFileIsInputError) {
  const Result r = run("solve " + (dir_ / "missing.case").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("cannot open"), std::string::npos) << r.err;
}

TEST_F(Cli, IterationCapGivesExitTwo) {
  const Result r = run("solve " + c118 + " --max-iter 1 --tol 1e-9 --threads 1 --format json");
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(gfdpf::json::parse(r.out)["solution"]["converged"].get<bool>());
}

TEST_F(Cli, BadFlagsAreInputErrors) {
  EXPECT_EQ(run("solve " + c14 + " --tol -1").code, 1);
  EXPECT_EQ(run("solve " + c14 + " --start sideways").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("bench " + c14 + " " + m14 + " --threads 1,x").code, 1);
}

TEST_F(Cli, DistsolveWithCheck) {
  const Result r = run("distsolve " + c118 + " " + m118 + " --threads 2 --check --format json");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = gfdpf::json::parse(r.out);
  EXPECT_LE(j["diff"]["max_angle_diff_deg"].get<double>(), 0.01);
  EXPECT_LE(j["diff"]["max_vm_diff_pu"].get<double>(), 0.001);
  EXPECT_EQ(j["areas"].size(), 4u);
}

TEST_F(Cli, DistsolveSingleAreaDiffIsZero) {
  std::string map;
  for (int b = 1; b <= 14; ++b) map += std::to_string(b) + " 1\n";
  const Result r = run("distsolve " + c14 + " " + write("one.areas", map).string() + " --format json");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = gfdpf::json::parse(r.out);
  EXPECT_EQ(j["diff"]["max_angle_diff_deg"].get<double>(), 0.0);
  EXPECT_EQ(j["diff"]["max_vm_diff_pu"].get<double>(), 0.0);
}

TEST_F(Cli, DistsolveUnassignedBus) {
  std::string map;
  for (int b = 1; b <= 14; ++b)
    if (b != 7) map += std::to_string(b) + " 1\n";
  const Result r = run("distsolve " + c14 + " " + write("gap.areas", map).string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("bus 7 unassigned"), std::string::npos) << r.err;
}

TEST_F(Cli, CheckFailureExitCode) {
  const Result r = run("distsolve " + c118 + " " + m118 + " --noise 0.01 --seed 3 --check --format json");
  EXPECT_EQ(r.code, 3) << r.err;
}

TEST_F(Cli, PartitionAudit) {
  const Result r = run("partition " + c14 + " " + m14 + " --format json");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = gfdpf::json::parse(r.out);
  EXPECT_EQ(j["inter_area_branches"].size(), 7u);
  EXPECT_EQ(j["injections"]["contributions"].size(), 14u);
}

TEST_F(Cli, CompareReports) {
  const fs::path a = dir_ / "a.json", b = dir_ / "b.json";
  ASSERT_EQ(run("solve " + c118 + " --format json -o " + a.string()).code, 0);
  ASSERT_EQ(run("distsolve " + c118 + " " + m118 + " --format json -o " + b.string()).code, 0);
  const Result self = run("compare " + a.string() + " " + a.string() + " --format json");
  ASSERT_EQ(self.code, 0) << self.err;
  EXPECT_EQ(gfdpf::json::parse(self.out)["max_angle_diff_deg"].get<double>(), 0.0);
  const Result cross = run("compare " + a.string() + " " + b.string() + " --check");
  EXPECT_EQ(cross.code, 0) << cross.err;
  EXPECT_EQ(run("compare " + a.string() + " " + (dir_ / "nope.json").string()).code, 1);
}

TEST_F(Cli, BenchTableShape) {
  const Result r = run("bench " + c14 + " " + m14 + " --threads 1,2 --repeats 1 --csv " + (dir_ / "t.csv").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("Monolithic FDPF"), std::string::npos);
  EXPECT_NE(r.out.find("Distributed FDPF"), std::string::npos);
  EXPECT_EQ(slurp(dir_ / "t.csv").rfind("method,iterations,threads_1_ms,threads_2_ms\n", 0), 0u);
}

TEST_F(Cli, DeterministicJsonAcrossThreads) {
  std::string first;
  for (int t : {1, 2, 4}) {
    const Result r = run("distsolve " + c118 + " " + m118 + " --format json --threads " + std::to_string(t));
    ASSERT_EQ(r.code, 0);
    const std::string s = gfdpf::strip_timing(gfdpf::json::parse(r.out)).dump();
    if (first.empty())
      first = s;
    else
      EXPECT_EQ(s, first) << t << " threads";
  }
}

TEST_F(Cli, MatricesExport) {
  const Result r = run("matrices " + c14 + " --out-dir " + (dir_ / "m").string());
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream bp(dir_ / "m" / "b_prime.mtx");
  const auto m = gfdpf::read_matrix_market(bp);
  EXPECT_EQ(m.size(), 13);
  EXPECT_TRUE(fs::exists(dir_ / "m" / "b_double_prime.symbolic.txt"));
}

TEST_F(Cli, SynthSmallGrid) {
  const fs::path cs = dir_ / "g.json", ms = dir_ / "g.areas";
  const Result r =
      run("synth " + c14 + " --rows 2 --cols 2 --out-case " + cs.string() + " --out-areas " + ms.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto net = gfdpf::load_case(cs.string());
  EXPECT_EQ(net.n_bus(), 56u);
  EXPECT_EQ(run("distsolve " + cs.string() + " " + ms.string()).code, 0);
}
