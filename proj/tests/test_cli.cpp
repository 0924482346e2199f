#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#ifndef MAXENTOS_CLI
#error "MAXENTOS_CLI must name the command line binary"
#endif

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("maxentos_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
    write("exp.json", R"({"margins":[{"family":"exponential","rate":3},{"family":"exponential","rate":2},{"family":"exponential","rate":1}]})");
    write("exp2.json", R"({"margins":[{"family":"exponential","rate":2},{"family":"exponential","rate":1}]})");
    write("beta.json", R"({"margins":[{"family":"beta_1_k","k":2},{"family":"uniform","a":0,"b":1}]})");
    write("uu.json", R"({"margins":[{"family":"uniform","a":0,"b":1},{"family":"uniform","a":0,"b":1}]})");
    write("rev.json", R"({"margins":[{"family":"exponential","rate":1},{"family":"exponential","rate":2}]})");
    write("iid2.json", R"({"margins":[{"family":"uniform_order_statistic","n":2,"rank":1},{"family":"uniform_order_statistic","n":2,"rank":2}]})");
    write("bad.json", "{bad");
  }
  void TearDown() override { fs::remove_all(dir_); }

  void write(const std::string& name, const std::string& text) { std::ofstream(dir_ / name) << text; }
  std::string read(const std::string& name) {
    std::ifstream in(dir_ / name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  std::string path(const std::string& name) { return (dir_ / name).string(); }

  // Runs the binary in the temp dir, stdout to out.txt.
  int run(const std::string& args) {
    const std::string cmd = "cd '" + dir_.string() + "' && '" MAXENTOS_CLI "' " + args + " > out.txt 2> err.txt";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, ValidateExitCodes) {
  EXPECT_EQ(run("validate --input exp.json"), 0);
  EXPECT_NE(read("out.txt").find("config:"), std::string::npos);
  EXPECT_EQ(run("validate --input rev.json"), 1);
  EXPECT_EQ(run("validate --input uu.json"), 1);
  EXPECT_NE(read("out.txt").find("-inf"), std::string::npos);
  EXPECT_EQ(run("validate --input iid2.json --multidiagonal"), 0);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("validate"), 2);
  EXPECT_EQ(run("validate --input missing.json"), 2);
  EXPECT_EQ(run("validate --input bad.json"), 2);
  EXPECT_EQ(run("frobnicate --input exp.json"), 2);
  EXPECT_EQ(run("sample --input exp.json --n nope"), 2);
}

TEST_F(Cli, Entropy) {
  EXPECT_EQ(run("entropy --input beta.json"), 0);
  EXPECT_NE(read("out.txt").find("H_F"), std::string::npos);
  EXPECT_EQ(run("entropy --input uu.json"), 1);
}

TEST_F(Cli, DensityGrid) {
  EXPECT_EQ(run("density --input beta.json --grid 2 --lower 0.5 --upper 0.8 --output d.csv"), 0);
  const std::string csv = read("d.csv");
  // Points (0.5,0.5), (0.5,0.8), (0.8,0.5), (0.8,0.8): the second has density 1.5625.
  std::istringstream in(csv);
  std::string header, line;
  std::getline(in, header);
  std::vector<double> f;
  while (std::getline(in, line)) f.push_back(std::stod(line.substr(line.rfind(',') + 1)));
  ASSERT_EQ(f.size(), 4u);
  EXPECT_NEAR(f[1], 1.5625, 1e-12);
  EXPECT_EQ(f[2], 0.0);
}

TEST_F(Cli, SampleIsReproducible) {
  EXPECT_EQ(run("sample --input exp.json --n 200 --seed 7 --output a.csv"), 0);
  EXPECT_EQ(run("sample --input exp.json --n 200 --seed 7 --output b.csv"), 0);
  EXPECT_EQ(run("sample --input exp.json --n 200 --seed 8 --output c.csv"), 0);
  EXPECT_EQ(read("a.csv"), read("b.csv"));
  EXPECT_NE(read("a.csv"), read("c.csv"));
  EXPECT_NE(read("a.csv.meta.json").find("\"seed\": 7"), std::string::npos);
  EXPECT_EQ(run("sample --input uu.json --n 10 --output u.csv"), 1);
}

TEST_F(Cli, VerifyPasses) {
  EXPECT_EQ(run("verify --input exp2.json --n 20000 --output report.json"), 0) << read("out.txt");
  EXPECT_NE(read("report.json").find("\"all_passed\": true"), std::string::npos);
}
