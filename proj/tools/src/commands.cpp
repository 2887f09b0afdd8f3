#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "dhl/correlation.hpp"
#include "dhl/errors.hpp"
#include "dhl/population_io.hpp"
#include "dhl_cli/cli.hpp"
#include "dhl_cli/output.hpp"

namespace dhl::cli {

namespace {

std::string num(double v) { return format_number(v); }
std::string num(long double v) { return format_number(v); }

CheckResult flagged(std::string name, std::string note) {
  CheckResult c;
  c.name = std::move(name);
  c.verdict = Verdict::kFlagged;
  c.note = std::move(note);
  return c;
}

std::size_t or_default(std::size_t value, std::size_t fallback) { return value == 0 ? fallback : value; }

void write_report(const std::filesystem::path& out, CommandResult& result) {
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& r : result.reports) reports.push_back(to_json(r));
  write_json(out / "report.json", reports);
  result.files.push_back("report.json");
}

// Paths to audit: all of Gamma_n when small, otherwise a seeded uniform sample.
std::vector<CylinderPath> audit_paths(const LatticeParams& params, int n, std::uint64_t seed, std::size_t limit) {
  const BigCount count = path_count(params, n);
  if (count.has_exact() && count.value() <= limit) return enumerate_paths(params, n);
  auto rng = rng::Stream::derive(seed, rng::Domain::kExperiment, 0xa0d17);
  std::vector<CylinderPath> paths;
  for (std::size_t i = 0; i < limit; ++i) paths.push_back(sample_uniform_path(params, n, rng));
  return paths;
}

}  // namespace

CommandResult cmd_rfunc(const RunConfig& config, const std::filesystem::path& out) {
  const VarianceProfile profile(config.b);
  const auto grid = parse_grid(config.grid.empty() ? "-8:1:8" : config.grid);
  const SeedKind seed = parse_seed_kind(config.seed_spec);

  std::vector<std::string> header{"r", "R", "R_prime", "depth", "kappa_sq", "eta", "psi_residual",
                                  "asymptotic_R", "asymptotic_excess", "asymptotic_bound"};
  for (int k = 3; k <= config.k_max; ++k) header.push_back("c" + std::to_string(k));
  header.push_back("status");
  CsvWriter csv(out / "rfunc.csv", header);

  ExperimentReport report;
  report.name = "rfunc";
  double worst_psi = 0.0;
  double worst_psi_r = 0.0;
  bool any_sandwich = false;
  bool sandwich_ok = true;
  std::string sandwich_note;
  std::size_t moment_overflows = 0;
  for (double r : grid) {
    std::vector<std::string> row{num(r)};
    RValue value;
    long double residual = 0.0L;
    bool overflow = false;
    try {
      // compared in log form so R(r+1) may exceed the long double range
      const LogRValue here = evaluate_log_R(profile, r);
      const LogRValue next = evaluate_log_R(profile, static_cast<long double>(r) + 1.0L);
      residual = std::fabs(std::expm1(log_psi(profile.b, here.log_R) - next.log_R));
      try {
        value = evaluate_R_joint(profile, r);
      } catch (const OverflowError&) {
        overflow = true;
        value.R = value.R_prime = std::numeric_limits<long double>::infinity();
        value.depth = here.depth;
      }
    } catch (const ConvergenceError& e) {
      report.checks.push_back(flagged("convergence_r=" + num(r), e.what()));
      row.insert(row.end(), header.size() - 2, "nan");
      row.push_back("flagged");
      csv.row(row);
      continue;
    }
    if (residual > worst_psi) {
      worst_psi = static_cast<double>(residual);
      worst_psi_r = r;
    }
    row.insert(row.end(), {num(value.R), num(value.R_prime), std::to_string(value.depth), num(profile.kappa_sq),
                           num(profile.eta), num(residual)});
    std::string status = overflow ? "R-overflow" : "ok";
    if (r < 0.0) {
      const long double u = -static_cast<long double>(r);
      const long double excess = std::fabs(value.R * u / profile.kappa_sq - 1.0L);
      const long double bound = 1.1L * profile.eta * std::log(u) / u;
      row.insert(row.end(), {num(asymptotic_R(profile, r)), num(excess), num(bound)});
      if (r <= -1000.0) {
        any_sandwich = true;
        if (!(excess <= bound)) {
          sandwich_ok = false;
          sandwich_note += "r=" + num(r) + " ";
        }
        status = excess <= bound ? "ok" : "asymptotic-fail";
      }
    } else {
      row.insert(row.end(), {"nan", "nan", "nan"});
    }
    try {
      const long double point[] = {static_cast<long double>(r)};
      const auto table = centered_moment_table(profile, point, config.k_max, seed, config.depth);
      for (int k = 3; k <= config.k_max; ++k) row.push_back(num(table.centered[0][k]));
    } catch (const OverflowError&) {
      ++moment_overflows;
      for (int k = 3; k <= config.k_max; ++k) row.push_back("inf");
      if (status == "ok") status = "moments-overflow";
    }
    row.push_back(status);
    csv.row(row);
  }
  report.checks.insert(report.checks.begin(),
                       check_error("psi_identity_residual", 0.0, worst_psi, worst_psi, 1e-10, "rel"));
  report.checks.front().note = "worst at r = " + num(worst_psi_r);
  if (any_sandwich) {
    report.checks.push_back(check_error("asymptotic_sandwich", 0.0, sandwich_ok ? 0.0 : 1.0,
                                        sandwich_ok ? 0.0 : 1.0, 0.0, "abs"));
    if (!sandwich_ok) report.checks.back().note = "violated at " + sandwich_note;
  }
  report.diagnostics.emplace_back("kappa_sq", static_cast<double>(profile.kappa_sq));
  report.diagnostics.emplace_back("eta", static_cast<double>(profile.eta));
  report.diagnostics.emplace_back("moment_overflow_rows", static_cast<double>(moment_overflows));

  CommandResult result;
  result.files.push_back("rfunc.csv");
  result.reports.push_back(std::move(report));
  write_report(out, result);
  return result;
}

CommandResult cmd_correlation(const RunConfig& config, const std::filesystem::path& out) {
  const LatticeParams params(config.b, config.segments());
  require_critical(params, "correlation");
  if (config.n < 1) throw UsageError("correlation needs --n >= 1");
  const VarianceProfile profile(config.b);
  const int n = config.n;
  const auto histogram = pair_count_histogram(params, n);
  const auto table = make_correlation_table(profile, config.r, histogram);

  CommandResult result;
  {
    CsvWriter csv(out / "histogram.csv", {"k", "count", "pair_fraction", "upsilon_weight"});
    for (std::size_t k = 0; k < histogram.counts.size(); ++k) {
      csv.row({std::to_string(k), histogram.counts[k].get_str(), num(table.pair_fraction(static_cast<int>(k))),
               num(std::exp(table.weight_log(static_cast<int>(k))))});
    }
    result.files.push_back("histogram.csv");
  }

  ExperimentReport report;
  report.name = "correlation";
  if (const BigCount count = path_count(params, n); count.has_exact() && count.value() <= 4096) {
    const auto brute = enumerate_pair_counts(params, n);
    const bool same = brute.counts == histogram.counts;
    report.checks.push_back(check_error("enumeration_match", 0.0, same ? 0.0 : 1.0, same ? 0.0 : 1.0, 0.0, "abs"));
  }

  const int n_max = std::max(n, config.b == 2 ? 10 : 6);
  const long double total_target = 1.0L + table.R_r;
  long double spread = 0.0L;
  bool moments_exact = true;
  {
    CsvWriter csv(out / "consistency.csv", {"n", "mean_N", "mean_N2", "total_mass", "target", "rel_err"});
    for (int m = 1; m <= n_max; ++m) {
      const auto h = m == n ? histogram : pair_count_histogram(params, m);
      const mpz_class p = exact_path_count(params, m);
      const mpz_class pp = p * p;
      const bool mean_ok = h.power_sum(1) == pp;
      const bool second_ok = h.power_sum(2) == pp * (1 + m * (config.b - 1));
      moments_exact = moments_exact && mean_ok && second_ok;
      const auto t = make_correlation_table(profile, config.r, h);
      const long double total = upsilon_total_mass(t);
      const long double err = std::fabs(total - total_target) / total_target;
      spread = std::max(spread, err);
      csv.row({std::to_string(m), mean_ok ? "1" : "mismatch", second_ok ? std::to_string(1 + m * (config.b - 1)) : "mismatch",
               num(total), num(total_target), num(err)});
    }
    result.files.push_back("consistency.csv");
  }
  report.checks.push_back(check_error("pair_count_moments_exact", 0.0, moments_exact ? 0.0 : 1.0,
                                      moments_exact ? 0.0 : 1.0, 0.0, "abs"));
  report.checks.back().note = "mean N = 1 and mean N^2 = 1 + n(b-1) for n = 1.." + std::to_string(n_max);
  report.checks.push_back(check_error("total_mass_consistency", static_cast<double>(total_target),
                                      static_cast<double>(upsilon_total_mass(table)), static_cast<double>(spread),
                                      1e-9, "rel"));

  const auto sample = audit_paths(params, n, config.seed, 4096);
  const long double marginal_target = total_target * std::exp(-table.log_paths);
  long double marginal_dev = 0.0L;
  for (const auto& p : sample) {
    marginal_dev = std::max(marginal_dev, std::fabs(marginal_check(table, p) - marginal_target) / marginal_target);
  }
  report.checks.push_back(check_error("marginal", static_cast<double>(marginal_target),
                                      static_cast<double>(marginal_target), static_cast<double>(marginal_dev), 1e-12,
                                      "rel"));
  report.checks.back().note = std::to_string(sample.size()) + " paths";

  const auto lebesgue = lebesgue_decomposition_weights(table);
  report.checks.push_back(check_error("rho_total", 1.0, static_cast<double>(lebesgue.rho_total),
                                      static_cast<double>(std::fabs(lebesgue.rho_total - 1.0L)), 1e-9, "abs"));

  const long double rn = rn_reweighted_mass(profile, table, config.a);
  const long double rn_target = 1.0L + evaluate_R(profile, static_cast<long double>(config.r) + config.a);
  report.checks.push_back(check_error("rn_exactness", static_cast<double>(rn_target), static_cast<double>(rn),
                                      static_cast<double>(std::fabs(rn - rn_target) / rn_target), 1e-9, "rel"));

  if (n <= 8) {
    long double worst = 0.0L;
    for (const auto& p : audit_paths(params, n, config.seed, 64)) {
      worst = std::max(worst, kernel_marginal_identity_check(profile, config.r, p).rel_err());
    }
    report.checks.push_back(
        check_error("kernel_marginal_identity", 0.0, static_cast<double>(worst), static_cast<double>(worst), 1e-8, "rel"));
  }
  report.diagnostics.emplace_back("R(r)", static_cast<double>(table.R_r));
  report.diagnostics.emplace_back("R(r-n)", static_cast<double>(table.R_shifted));
  report.diagnostics.emplace_back("log_paths", static_cast<double>(table.log_paths));
  result.reports.push_back(std::move(report));
  write_report(out, result);
  return result;
}

CommandResult cmd_simulate(const RunConfig& config, const std::filesystem::path& out) {
  const VarianceProfile profile(config.b);
  const ExperimentOptions options = config.experiment_options();
  CommandResult result;
  MassPopulation population;
  auto report = mass_law_check(profile, config.r, config.size, config.seed, options, &population);
  report.raw_totals.clear();
  write_population(out / "population.bin", population);
  result.files.push_back("population.bin");

  {
    const long double point[] = {static_cast<long double>(config.r)};
    std::vector<long double> oracle(config.k_max + 1, NAN);
    try {
      oracle = centered_moment_table(profile, point, config.k_max, options.seed, config.depth).centered[0];
    } catch (const OverflowError&) {
      result.notes.push_back("moment oracle overflowed at r = " + num(config.r));
    }
    CsvWriter csv(out / "moments.csv", {"k", "raw", "raw_se", "centered", "centered_se", "oracle_centered"});
    for (int k = 2; k <= config.k_max; ++k) {
      const auto raw = stats::raw_moment(population.masses, k);
      const auto centered = stats::central_moment(population.masses, k);
      csv.row({std::to_string(k), num(raw.value), num(raw.se), num(centered.value), num(centered.se), num(oracle[k])});
    }
    result.files.push_back("moments.csv");
  }
  result.reports.push_back(std::move(report));

  if (config.n >= 1 && config.realizations > 0) {
    result.reports.push_back(
        measure_correlation_check(profile, config.r, config.n, config.realizations, sub_seed(config.seed, 7), options));
  }
  write_report(out, result);
  return result;
}

CommandResult cmd_gmc(const RunConfig& config, const std::filesystem::path& out) {
  const VarianceProfile profile(config.b);
  const ExperimentOptions options = config.experiment_options();
  const std::string& which = config.check;
  static const std::vector<std::string> known{"shift", "mean", "kahane", "conditional", "renormalization",
                                              "strong-disorder", "all"};
  if (std::find(known.begin(), known.end(), which) == known.end()) throw UsageError("unknown --check " + which);
  const bool all = which == "all";
  CommandResult result;
  if (all || which == "shift") result.reports.push_back(shift_check(profile, config.r, config.a, config.n, config.seed, options));
  if (all || which == "mean") {
    result.reports.push_back(conditional_mean_check(profile, config.r, config.a, config.n,
                                                    or_default(config.draws, 100'000), sub_seed(config.seed, 1), options));
  }
  if (all || which == "kahane") {
    result.reports.push_back(kahane_check(profile, config.r, config.a, config.n, parse_int_list(config.orders),
                                          or_default(config.draws, 1'000'000), sub_seed(config.seed, 2), options));
  }
  if (all || which == "conditional") {
    result.reports.push_back(conditional_gmc_experiment(profile, config.r, config.a, config.n,
                                                        or_default(config.realizations, 1000),
                                                        or_default(config.draws, 1000), sub_seed(config.seed, 3), options));
  }
  if (all || which == "renormalization") {
    result.reports.push_back(renormalization_consistency(profile, config.r, config.a, std::max(config.n, 2),
                                                         or_default(config.realizations, 1000),
                                                         or_default(config.draws, 1000), sub_seed(config.seed, 4), options));
  }
  if (all || which == "strong-disorder") {
    const auto grid = parse_grid(config.grid.empty() ? "1,4,9,16" : config.grid);
    result.reports.push_back(strong_disorder_bound(profile, grid, config.n, or_default(config.realizations, 1000),
                                                   or_default(config.draws, 1000), sub_seed(config.seed, 5), options));
  }

  bool any_totals = false;
  for (const auto& r : result.reports) any_totals = any_totals || !r.raw_totals.empty();
  if (any_totals) {
    CsvWriter csv(out / "totals.csv", {"report", "index", "total"});
    for (const auto& r : result.reports) {
      for (std::size_t i = 0; i < r.raw_totals.size(); ++i) csv.row({r.name, std::to_string(i), num(r.raw_totals[i])});
    }
    result.files.push_back("totals.csv");
  }
  write_report(out, result);
  return result;
}

CommandResult cmd_fixed_point(const RunConfig& config, const std::filesystem::path& out, std::ostream& console) {
  const int b = config.b;
  const int s = config.segments();
  const double x = intersection_fixed_point(b, s);
  const double dim = intersection_hausdorff_dim(b, s);
  const double residual = std::fabs((1.0 - std::pow(1.0 - x, s)) / b - x);
  console << "fixed_point " << num(x) << '\n' << "dimension " << num(dim) << '\n' << "residual " << num(residual) << '\n';

  ExperimentReport report;
  report.name = "fixed-point";
  report.checks.push_back(check_error("fixed_point_residual", 0.0, residual, residual, 1e-12, "abs"));
  report.diagnostics.emplace_back("fixed_point", x);
  report.diagnostics.emplace_back("dimension", dim);
  CommandResult result;
  result.reports.push_back(std::move(report));
  write_report(out, result);
  return result;
}

}  // namespace dhl::cli
