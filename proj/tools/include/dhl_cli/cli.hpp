#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "dhl/experiments.hpp"

namespace dhl::cli {

// Merged configuration: defaults, then the --config file, then flags.
struct RunConfig {
  std::string command;
  int b = 2;
  int s = 0;  // 0: same as b
  double r = 0.0;
  double a = 1.0;
  int n = 2;
  int depth = kDefaultPopulationDepth;
  std::size_t size = 1'000'000;
  std::uint64_t seed = 1;
  std::string seed_spec = "two-point";
  std::string mode = "exact-discrete";
  std::string grid;  // start:step:stop or a comma list; empty for the command default
  std::string out = "dhl-out";
  unsigned threads = 1;
  std::uint32_t chunks = kDefaultChunks;
  bool allow_flagged = false;
  std::size_t realizations = 0;  // 0: command default
  std::size_t draws = 0;         // 0: command default
  std::size_t leaf_size = 1'000'000;
  int k_max = 4;
  std::string check = "all";
  std::string orders = "2,3";

  int segments() const { return s == 0 ? b : s; }
  ExperimentOptions experiment_options() const;
};

struct CommandResult {
  std::vector<ExperimentReport> reports;
  std::vector<std::string> files;  // relative to the output directory
  std::vector<std::string> notes;
};

std::vector<double> parse_grid(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);

CommandResult cmd_rfunc(const RunConfig& config, const std::filesystem::path& out);
CommandResult cmd_correlation(const RunConfig& config, const std::filesystem::path& out);
CommandResult cmd_simulate(const RunConfig& config, const std::filesystem::path& out);
CommandResult cmd_gmc(const RunConfig& config, const std::filesystem::path& out);
CommandResult cmd_fixed_point(const RunConfig& config, const std::filesystem::path& out, std::ostream& console);

// Exit codes: 0 ok, 1 failed (or flagged) checks, 2 usage or domain error, 3 other errors.
int run(int argc, const char* const* argv, std::ostream& console, std::ostream& errors);

}  // namespace dhl::cli
