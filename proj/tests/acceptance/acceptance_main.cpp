// Acceptance suite: one line per criterion, then the checks behind it.
// Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dhl/correlation.hpp"
#include "dhl/experiments.hpp"
#include "dhl/lattice.hpp"
#include "dhl/rfunction.hpp"
#include "dhl_cli/cli.hpp"
#include "dhl_cli/output.hpp"

namespace fs = std::filesystem;
using namespace dhl;
using cli::format_number;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> lines;

  void require(bool ok, const std::string& line) {
    pass = pass && ok;
    lines.push_back(std::string(ok ? "[pass] " : "[fail] ") + line);
  }
  void info(const std::string& line) { lines.push_back("[info] " + line); }

  // Binding checks fail the criterion on kFail; flags are shown but only
  // record that the estimate is noisy.
  void bind(const ExperimentReport& report, const std::vector<std::string>& binding) {
    for (const auto& c : report.checks) {
      const bool binds = binding.empty() || std::find(binding.begin(), binding.end(), c.name) != binding.end();
      std::ostringstream line;
      line << '[' << to_string(c.verdict) << (binds ? "" : ", diagnostic") << "] " << report.name << '/' << c.name
           << "  estimate " << format_number(c.estimate) << "  target " << format_number(c.target);
      if (c.se > 0.0) line << "  se " << format_number(c.se);
      if (!c.note.empty()) line << "  (" << c.note << ')';
      lines.push_back(line.str());
      if (binds && c.verdict == Verdict::kFail) pass = false;
    }
    for (const auto& [key, value] : report.diagnostics) {
      lines.push_back("    " + report.name + ": " + key + " = " + format_number(value));
    }
  }
};

struct Criterion {
  int id;
  std::string title;
  double limit_seconds;  // 0: no runtime requirement
  std::function<Outcome()> run;
};

std::string sci(double x) { return format_number(x); }

// --- 1-4, 11: deterministic ------------------------------------------------

Outcome recursion_fidelity() {
  Outcome out;
  for (int b : {2, 3}) {
    const VarianceProfile profile(b);
    long double worst = 0.0L;
    double worst_r = 0.0;
    for (int i = 0; i <= 128; ++i) {
      const double r = -8.0 + 0.125 * i;
      const long double gap =
          log_psi(b, evaluate_log_R(profile, r).log_R) - evaluate_log_R(profile, r + 1.0L).log_R;
      const long double residual = std::fabs(std::expm1(gap));
      if (residual > worst) {
        worst = residual;
        worst_r = r;
      }
    }
    out.require(worst < 1e-10L, "b=" + std::to_string(b) + " max relative |psi(R(r)) - R(r+1)| over r in [-8, 8] step 1/8 = " +
                                    sci(static_cast<double>(worst)) + " at r = " + sci(worst_r));
  }
  return out;
}

Outcome asymptotics() {
  Outcome out;
  const VarianceProfile profile(2);
  for (double r : {-1e3, -1e4, -1e5, -1e6}) {
    const long double u = -r;
    const long double R = evaluate_R(profile, r);
    const long double excess = std::fabs(R * u / profile.kappa_sq - 1.0L);
    const long double bound = 1.1L * profile.eta * std::log(u) / u;
    out.require(excess <= bound, "r=" + sci(r) + "  |R(r)(-r)/kappa^2 - 1| = " + sci(static_cast<double>(excess)) +
                                     "  bound " + sci(static_cast<double>(bound)));
  }
  return out;
}

std::string histogram_text(const PairCountHistogram& h) {
  std::string text;
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    if (h.counts[k] == 0) continue;
    text += (text.empty() ? "" : ",") + std::to_string(k) + ":" + h.counts[k].get_str();
  }
  return "{" + text + "}";
}

Outcome exact_combinatorics() {
  Outcome out;
  const LatticeParams params(2, 2);
  const std::vector<std::vector<int>> expected{{2, 0, 2}, {40, 0, 16, 0, 8}};
  for (int n = 1; n <= 2; ++n) {
    const auto h = pair_count_histogram(params, n);
    const auto brute = enumerate_pair_counts(params, n);
    bool literal = h.counts.size() == expected[n - 1].size();
    for (std::size_t k = 0; literal && k < h.counts.size(); ++k) literal = h.counts[k] == expected[n - 1][k];
    out.require(h.counts == brute.counts && literal,
                "n=" + std::to_string(n) + " histogram " + histogram_text(h) + " vs enumeration " + histogram_text(brute));
  }
  for (int n = 1; n <= 10; ++n) {
    const auto h = pair_count_histogram(params, n);
    const mpz_class pp = exact_path_count(params, n) * exact_path_count(params, n);
    mpq_class mean(h.power_sum(1), pp);
    mpq_class second(h.power_sum(2), pp);
    mean.canonicalize();
    second.canonicalize();
    out.require(mean == 1 && second == 1 + n,
                "n=" + std::to_string(n) + "  E[N] = " + mean.get_str() + "  E[N^2] = " + second.get_str() + " (exact)");
  }
  return out;
}

Outcome upsilon_consistency() {
  Outcome out;
  const VarianceProfile profile(2);
  const LatticeParams params(2, 2);
  const double r = 0.0;
  const double a = 1.0;
  const long double target = 1.0L + evaluate_R(profile, r);
  long double lo = INFINITY, hi = -INFINITY;
  for (int n = 1; n <= 10; ++n) {
    const long double total = upsilon_total_mass(make_correlation_table(profile, r, n));
    lo = std::min(lo, total);
    hi = std::max(hi, total);
  }
  const long double spread = (hi - lo) / target;
  const long double off = std::max(std::fabs(hi - target), std::fabs(lo - target)) / target;
  out.require(spread < 1e-9L && off < 1e-9L, "total mass over n=1..10: relative spread " + sci(static_cast<double>(spread)) +
                                                  ", max deviation from 1 + R(0) " + sci(static_cast<double>(off)));

  const auto table = make_correlation_table(profile, r, 2);
  const long double marginal_target = target * std::exp(-table.log_paths);
  long double worst = 0.0L;
  const auto paths = enumerate_paths(params, 2);
  for (const auto& p : paths) worst = std::max(worst, std::fabs(marginal_check(table, p) - marginal_target));
  out.require(worst < 1e-12L, "n=2 marginal, all " + std::to_string(paths.size()) +
                                  " paths: max |sum_q upsilon(p x q) - (1 + R)/|Gamma|| = " + sci(static_cast<double>(worst)));

  const auto lebesgue = lebesgue_decomposition_weights(table);
  const long double rho_gap = std::fabs(lebesgue.rho_total - 1.0L);
  out.require(rho_gap < 1e-9L, "rho total mass - 1 = " + sci(static_cast<double>(rho_gap)));

  for (int n = 1; n <= 10; ++n) {
    const long double rn = rn_reweighted_mass(profile, make_correlation_table(profile, r, n), a);
    const long double rn_target = 1.0L + evaluate_R(profile, r + a);
    const long double gap = std::fabs(rn - rn_target) / rn_target;
    out.require(gap < 1e-9L, "n=" + std::to_string(n) + " RN identity relative gap " + sci(static_cast<double>(gap)));
  }

  auto rng = rng::Stream::derive(4, rng::Domain::kTest, 0xacc4);
  for (int n = 1; n <= 8; ++n) {
    std::vector<CylinderPath> sample;
    if (n <= 2) {
      sample = enumerate_paths(params, n);
    } else {
      for (int i = 0; i < 32; ++i) sample.push_back(sample_uniform_path(params, n, rng));
    }
    long double w = 0.0L;
    for (const auto& p : sample) w = std::max(w, kernel_marginal_identity_check(profile, r, p).rel_err());
    out.require(w < 1e-8L, "n=" + std::to_string(n) + " kernel-marginal identity, " + std::to_string(sample.size()) +
                               " paths: max relative error " + sci(static_cast<double>(w)));
  }
  return out;
}

Outcome subcritical_fixed_point() {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  const double x = intersection_fixed_point(2, 3);
  const double d = intersection_hausdorff_dim(2, 3);
  const double us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - start).count();
  const double x_target = (3.0 - std::sqrt(5.0)) / 2.0;
  const double d_target = 1.0 - std::log(2.0) / std::log(3.0);
  out.require(std::fabs(x - x_target) <= 1e-12, "fixed point " + sci(x) + " vs " + sci(x_target));
  out.require(std::fabs(d - d_target) <= 1e-12, "dimension " + sci(d) + " vs " + sci(d_target));
  out.require(us < 1000.0, "both evaluations took " + sci(us) + " us");
  return out;
}

// --- 5-10: statistical ------------------------------------------------------

ExperimentOptions options() {
  ExperimentOptions o;
  o.threads = 1;
  return o;
}

Outcome cascade_law() {
  Outcome out;
  const VarianceProfile profile(2);
  ExperimentOptions o = options();
  o.depth = 24;
  out.bind(mass_law_check(profile, 0.0, 1'000'000, 5, o), {});
  return out;
}

Outcome measure_correlations() {
  Outcome out;
  const VarianceProfile profile(2);
  const std::size_t realizations = 10'000;
  const double r = largest_reliable_pair_level(profile, 2, realizations);
  out.info("pair level r = " + sci(r) + ": largest integer r <= 0 whose predicted relative SE of E[M(p)^2] is <= 10% (" +
           sci(predicted_pair_relative_se(profile, r, 2, realizations)) + ")");
  out.bind(measure_correlation_check(profile, r, 2, realizations, 6, options()), {});
  // Not binding: at r = 0 the same estimator has predicted relative SE
  // around 1e11, so its verdict says nothing about the measure.
  const auto at_zero = measure_correlation_check(profile, 0.0, 2, realizations, 6, options());
  const auto& pair = at_zero.check("pair_correlations_vs_upsilon");
  out.info("r = 0 for reference: " + std::string(to_string(pair.verdict)) + " pair_correlations_vs_upsilon estimate " +
           sci(pair.estimate) + " target " + sci(pair.target) + " se " + sci(pair.se) + "; predicted relative SE " +
           sci(predicted_pair_relative_se(profile, 0.0, 2, realizations)));
  return out;
}

Outcome gmc_identities() {
  Outcome out;
  const VarianceProfile profile(2);
  out.bind(shift_check(profile, 0.0, 1.0, 2, 7, options()), {});
  out.bind(conditional_mean_check(profile, 0.0, 1.0, 2, 100'000, 7, options()), {});
  out.bind(kahane_check(profile, 0.0, 1.0, 2, {2, 3}, 1'000'000, 7, options()), {});
  return out;
}

Outcome composition_law() {
  Outcome out;
  const VarianceProfile profile(2);
  out.bind(conditional_gmc_experiment(profile, 0.0, 1.0, 3, 1000, 1000, 8, options()),
           {"second_moment_vs_1+R(r+a)", "second_moment_vs_direct", "third_moment_vs_direct"});
  return out;
}

Outcome renormalization() {
  Outcome out;
  const VarianceProfile profile(2);
  out.bind(renormalization_consistency(profile, 0.0, 1.0, 3, 1000, 1000, 9, options()),
           {"second_moment_single_vs_composite", "weight_decomposition_audit"});
  return out;
}

Outcome strong_disorder() {
  Outcome out;
  const VarianceProfile profile(2);
  out.bind(strong_disorder_bound(profile, {1.0, 4.0, 9.0, 16.0}, 3, 1000, 1000, 10, options()), {});
  return out;
}

// --- 12: reproducibility ----------------------------------------------------

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dhl");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream console, errors;
  return cli::run(static_cast<int>(argv.size()), argv.data(), console, errors);
}

// Files that carry run metadata rather than data: the manifest has a
// timestamp and wall clock, the config snapshot names the output directory.
bool is_data_file(const fs::path& path) {
  const auto name = path.filename().string();
  return name != "manifest.json" && name != "config.ini";
}

Outcome reproducibility(const fs::path& scratch) {
  Outcome out;
  const std::vector<std::vector<std::string>> commands{
      {"rfunc", "--b", "3", "--grid", "-8:0.5:8"},
      {"correlation", "--n", "4", "--r", "-1"},
      {"simulate", "--r", "-6", "--size", "100000", "--realizations", "200", "--leaf-size", "50000"},
      {"gmc", "--check", "all", "--r", "-2", "--n", "2", "--realizations", "30", "--draws", "30", "--size", "20000",
       "--leaf-size", "20000", "--grid", "1,4"},
      {"fixed-point", "--b", "2", "--s", "3"},
  };
  for (const auto& base : commands) {
    const fs::path root = scratch / ("repro-" + base[0]);
    fs::remove_all(root);
    const std::vector<std::pair<std::string, std::string>> runs{{"first", "1"}, {"second", "1"}, {"threads", "3"}};
    for (const auto& [label, threads] : runs) {
      auto args = base;
      args.insert(args.end(), {"--seed", "21", "--chunks", "16", "--threads", threads, "--out", (root / label).string()});
      // 1 only means some statistical check did not pass at these small sizes
      const int rc = run_cli(args);
      if (rc != 0 && rc != 1) out.require(false, base[0] + " (" + label + ") exited with " + std::to_string(rc));
    }
    std::set<std::string> names;
    for (const auto& entry : fs::directory_iterator(root / "first")) {
      if (is_data_file(entry.path())) names.insert(entry.path().filename().string());
    }
    std::size_t bytes = 0;
    bool same = !names.empty();
    std::string mismatched;
    for (const auto& name : names) {
      const auto a = slurp(root / "first" / name);
      bytes += a.size();
      for (const char* other : {"second", "threads"}) {
        if (slurp(root / other / name) != a) {
          same = false;
          mismatched += " " + std::string(other) + "/" + name;
        }
      }
    }
    std::string listing;
    for (const auto& name : names) listing += (listing.empty() ? "" : ", ") + name;
    out.require(same, base[0] + ": " + std::to_string(names.size()) + " data files (" + listing + "; " +
                          std::to_string(bytes) + " bytes) identical across reruns and 1 vs 3 threads" +
                          (mismatched.empty() ? "" : "; differs:" + mismatched));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance suite"};
  std::string scratch = "acceptance-scratch";
  std::vector<int> only;
  app.add_option("--scratch", scratch, "directory for CLI output");
  app.add_option("--only", only, "criterion numbers to run (default: all)");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(scratch);

  const std::vector<Criterion> criteria{
      {1, "recursion fidelity", 1.0, recursion_fidelity},
      {2, "asymptotics", 1.0, asymptotics},
      {3, "exact combinatorics", 5.0, exact_combinatorics},
      {4, "upsilon consistency", 10.0, upsilon_consistency},
      {5, "cascade law matching", 120.0, cascade_law},
      {6, "measure-level correlations", 120.0, measure_correlations},
      {7, "GMC identities", 60.0, gmc_identities},
      {8, "composition law", 600.0, composition_law},
      {9, "renormalization consistency", 600.0, renormalization},
      {10, "strong disorder", 600.0, strong_disorder},
      {11, "subcritical fixed point", 0.0, subcritical_fixed_point},
      {12, "reproducibility", 0.0, [&] { return reproducibility(scratch); }},
  };

  int failed = 0;
  int ran = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome.require(false, std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream timing;
    timing << std::fixed << std::setprecision(2) << seconds << " s";
    if (c.limit_seconds > 0.0) {
      timing << ", limit " << c.limit_seconds << " s";
      if (seconds >= c.limit_seconds) outcome.require(false, "runtime " + timing.str());
    }
    if (!outcome.pass) ++failed;
    char id[8];
    std::snprintf(id, sizeof id, "%02d", c.id);
    std::cout << (outcome.pass ? "[PASS]" : "[FAIL]") << " AC-" << id << ' ' << c.title << "  (" << timing.str()
              << ")\n";
    for (const auto& line : outcome.lines) std::cout << "    " << line << '\n';
    std::cout.flush();
  }
  std::cout << (ran - failed) << '/' << ran << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
