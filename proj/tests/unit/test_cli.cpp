#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dhl/errors.hpp"
#include "dhl_cli/cli.hpp"
#include "dhl_cli/output.hpp"

using namespace dhl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("dhl_cli_test_" + name);
  fs::remove_all(dir);
  return dir;
}

int run_cli(std::vector<std::string> args, std::string* out = nullptr, std::string* err = nullptr) {
  args.insert(args.begin(), "dhl");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  const int rc = cli::run(static_cast<int>(argv.size()), argv.data(), o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return rc;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Cli, FormatNumber) {
  EXPECT_EQ(cli::format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(cli::format_number(1.0), "1");
  EXPECT_EQ(cli::format_number(-2.5e-20), "-2.4999999999999999e-20");
  EXPECT_EQ(cli::format_number(std::nan("")), "nan");
}

TEST(Cli, Grid) {
  EXPECT_EQ(cli::parse_grid("-8:1:8").size(), 17u);
  EXPECT_EQ(cli::parse_grid("0:1:0"), std::vector<double>{0.0});
  EXPECT_EQ(cli::parse_grid("1,4,9,16"), (std::vector<double>{1, 4, 9, 16}));
  EXPECT_EQ(cli::parse_grid("0:0.5:1"), (std::vector<double>{0, 0.5, 1}));
  EXPECT_THROW(cli::parse_grid("1:2"), UsageError);
  EXPECT_THROW(cli::parse_grid("3:1:0"), UsageError);
  EXPECT_THROW(cli::parse_grid("a,b"), UsageError);
}

TEST(Cli, RfuncTable) {
  const auto dir = scratch("rfunc");
  EXPECT_EQ(run_cli({"rfunc", "--grid=-8:1:8", "--out", dir.string()}), 0);
  std::ifstream csv(dir / "rfunc.csv");
  std::string line;
  int rows = -1;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 17);
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["command"], "rfunc");
  EXPECT_EQ(manifest["status"], "pass");
  EXPECT_EQ(manifest["config"]["grid"], "-8:1:8");
}

TEST(Cli, KappaColumnForB3) {
  const auto dir = scratch("rfunc3");
  EXPECT_EQ(run_cli({"rfunc", "--b", "3", "--grid", "0:1:0", "--out", dir.string()}), 0);
  std::ifstream csv(dir / "rfunc.csv");
  std::string header, row;
  std::getline(csv, header);
  std::getline(csv, row);
  std::vector<std::string> fields;
  std::istringstream in(row);
  for (std::string f; std::getline(in, f, ',');) fields.push_back(f);
  ASSERT_GT(fields.size(), 4u);
  EXPECT_EQ(header.substr(0, header.find(",eta")), "r,R,R_prime,depth,kappa_sq");
  EXPECT_EQ(fields[4], "1");
}

TEST(Cli, AsymptoticRows) {
  const auto dir = scratch("asym");
  std::string out;
  EXPECT_EQ(run_cli({"rfunc", "--grid", "-1000000,-100000,-10000,-1000", "--out", dir.string()}, &out), 0);
  EXPECT_NE(out.find("[pass] rfunc/asymptotic_sandwich"), std::string::npos);
}

TEST(Cli, CorrelationHistogram) {
  const auto dir = scratch("corr");
  EXPECT_EQ(run_cli({"correlation", "--n", "2", "--out", dir.string()}), 0);
  const auto csv = slurp(dir / "histogram.csv");
  EXPECT_NE(csv.find("\n0,40,"), std::string::npos);
  EXPECT_NE(csv.find("\n2,16,"), std::string::npos);
  EXPECT_NE(csv.find("\n4,8,"), std::string::npos);
  std::string err;
  EXPECT_EQ(run_cli({"correlation", "--s", "3", "--out", dir.string()}, nullptr, &err), 2);
  EXPECT_NE(err.find("critical lattice"), std::string::npos) << err;
}

TEST(Cli, FixedPoint) {
  const auto dir = scratch("fp");
  std::string out, err;
  EXPECT_EQ(run_cli({"fixed-point", "--b", "2", "--s", "3", "--out", dir.string()}, &out), 0);
  EXPECT_NE(out.find("fixed_point 0.381966"), std::string::npos);
  EXPECT_NE(out.find("dimension 0.369070"), std::string::npos);
  EXPECT_EQ(run_cli({"fixed-point", "--b", "2", "--s", "2", "--out", dir.string()}, &out, &err), 2);
  EXPECT_NE(err.find("critical"), std::string::npos);
}

TEST(Cli, ConfigFile) {
  const auto dir = scratch("config");
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "run.ini");
    cfg << "# fixed point\ncommand=fixed-point\nb=2\ns=3\nout=" << (dir / "a").string() << "\n";
  }
  EXPECT_EQ(run_cli({"--config", (dir / "run.ini").string()}), 0);
  // flags override the file
  std::string out;
  EXPECT_EQ(run_cli({"--config", (dir / "run.ini").string(), "--s", "4", "--out", (dir / "b").string()}, &out), 0);
  EXPECT_NE(out.find("fixed_point 0.456"), std::string::npos) << out;
  {
    std::ofstream cfg(dir / "bad.ini");
    cfg << "command=fixed-point\nbogus=1\n";
  }
  EXPECT_EQ(run_cli({"--config", (dir / "bad.ini").string()}), 2);
  // the resolved snapshot re-runs
  EXPECT_EQ(run_cli({"--config", (dir / "b" / "config.ini").string(), "--out", (dir / "c").string()}), 0);
  EXPECT_EQ(slurp(dir / "b" / "report.json"), slurp(dir / "c" / "report.json"));
}

TEST(Cli, SimulateFlagsHeavyTails) {
  const auto dir = scratch("sim");
  const int rc = run_cli({"simulate", "--r", "-10", "--size", "100000", "--out", dir.string()});
  EXPECT_TRUE(rc == 0 || rc == 1);
  EXPECT_TRUE(fs::exists(dir / "population.bin"));
  EXPECT_TRUE(fs::exists(dir / "moments.csv"));
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["checks"][1]["name"], "variance_vs_R");
  EXPECT_EQ(manifest["checks"][3]["name"], "fourth_central_vs_oracle");
  EXPECT_EQ(manifest["checks"][3]["verdict"], "flagged");
  EXPECT_NE(manifest["notes"][0].get<std::string>().find("seeding bias"), std::string::npos);
}

TEST(Cli, ByteIdenticalAcrossThreads) {
  const auto a = scratch("repro_a");
  const auto b = scratch("repro_b");
  const std::vector<std::string> base{"gmc", "--check", "conditional", "--r", "-4", "--n", "2", "--realizations", "40",
                                      "--draws", "20", "--size", "20000", "--leaf-size", "20000", "--seed", "12"};
  auto args_a = base;
  args_a.insert(args_a.end(), {"--threads", "1", "--out", a.string()});
  auto args_b = base;
  args_b.insert(args_b.end(), {"--threads", "3", "--out", b.string()});
  run_cli(args_a);
  run_cli(args_b);
  for (const char* f : {"report.json", "totals.csv"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Cli, ExecutableRuns) {
  const auto dir = scratch("exe");
  const std::string cmd = std::string(DHL_EXECUTABLE) + " fixed-point --s 3 --out " + dir.string() + " > /dev/null";
  EXPECT_EQ(std::system(cmd.c_str()), 0);
  const std::string bad = std::string(DHL_EXECUTABLE) + " nonsense > /dev/null 2>&1";
  EXPECT_NE(std::system(bad.c_str()), 0);
}
