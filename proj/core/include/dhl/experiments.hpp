#pragma once

// Statistical and deterministic checks built from the cascade and gmc layers.
// Every experiment returns a report of named checks with three-valued verdicts;
// moment checks are binding, KS statistics are diagnostics that can only flag.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dhl/cascade.hpp"
#include "dhl/gmc.hpp"
#include "dhl/stats.hpp"

namespace dhl {

enum class Verdict { kPass, kFail, kFlagged };
const char* to_string(Verdict verdict);

struct CheckResult {
  std::string name;
  double target = 0.0;
  double estimate = 0.0;
  double se = 0.0;         // combined SE used for the comparison (0 if deterministic)
  double tolerance = 0.0;  // in SE units for statistical checks, absolute/relative otherwise
  std::string tolerance_kind;  // "z", "abs", "rel", "p-value"
  Verdict verdict = Verdict::kPass;
  std::string note;
};

// |estimate - target| <= z * se
CheckResult check_z(std::string name, const stats::Estimate& estimate, const stats::Estimate& target, double z);
CheckResult check_z(std::string name, const stats::Estimate& estimate, double target, double z);
// error <= tolerance (error already computed by the caller)
CheckResult check_error(std::string name, double target, double estimate, double error, double tolerance,
                        std::string kind);
// Diagnostic only: flagged when p < alpha.
CheckResult ks_diagnostic(std::string name, const stats::KsResult& ks, double alpha = 1e-3);

struct ExperimentReport {
  std::string name;
  std::vector<CheckResult> checks;
  std::vector<std::pair<std::string, double>> diagnostics;
  std::vector<std::string> notes;
  std::vector<double> raw_totals;

  bool any(Verdict v) const;
  // No failures, and no flags unless allowed.
  bool ok(bool allow_flagged) const;
  const CheckResult& check(const std::string& check_name) const;
};

struct ExperimentOptions {
  unsigned threads = 1;
  std::uint32_t chunks = kDefaultChunks;
  SeedKind seed = SeedKind::kTwoPoint;
  int depth = kDefaultPopulationDepth;
  std::size_t population_size = 1'000'000;       // direct M_{r+a} populations
  std::size_t leaf_population_size = 1'000'000;  // leaves of MeasureSamples
  KernelMode mode = KernelMode::kExactDiscrete;   // shift, mean and Kahane checks
};

// Independent master seeds for the parts of one experiment.
std::uint64_t sub_seed(std::uint64_t master_seed, std::uint64_t tag);

// Seeding-bias line attached to every stochastic report.
std::string seeding_bias_note(const ExperimentOptions& options);

// --- gmc identities -------------------------------------------------------

// Shift covariance (deterministic) and Cameron-Martin density vs the shifted
// Gaussian likelihood ratio, on the full support at generation n.
ExperimentReport shift_check(const VarianceProfile& profile, double r, double a, int generation,
                             std::uint64_t master_seed, const ExperimentOptions& options = {});

// Per-cylinder means of GMC weights vs the reference, and pair moments
// E[M(p)M(q)] vs exp(K(p,q)) mu_p mu_q, uniform reference on Gamma_n.
ExperimentReport conditional_mean_check(const VarianceProfile& profile, double r, double a, int generation,
                                        std::size_t draws, std::uint64_t master_seed,
                                        const ExperimentOptions& options = {});

// Kahane formula vs Monte Carlo moments of M(Gamma_n) for each order, plus
// the (n = 1, lambda = log 2, m = 2) value 5/2.
ExperimentReport kahane_check(const VarianceProfile& profile, double r, double a, int generation,
                              const std::vector<int>& orders, std::size_t draws, std::uint64_t master_seed,
                              const ExperimentOptions& options = {});

// --- cascade ----------------------------------------------------------------

// simulate_mass_law at (r, depth) against the moment oracle and across two
// seed kinds.
// The primary population is moved into *primary when given.
ExperimentReport mass_law_check(const VarianceProfile& profile, double r, std::size_t size,
                                std::uint64_t master_seed, const ExperimentOptions& options = {},
                                MassPopulation* primary = nullptr);

// Relative SE of the diagonal pair estimator E[M(p)^2] over `realizations`
// MeasureSamples at (r, n), predicted from the moment oracle of the leaves:
// sqrt(((m4 / m2^2)^{s^n} - 1) / realizations).
double predicted_pair_relative_se(const VarianceProfile& profile, double r, int generation,
                                  std::size_t realizations);
// Largest integer r <= r_max whose predicted relative SE is within the bound.
double largest_reliable_pair_level(const VarianceProfile& profile, int generation, std::size_t realizations,
                                   double max_relative_se = 0.10, double r_max = 0.0);

// Cylinder means and pair moments of MeasureSamples at (r, n) vs mu and upsilon_r.
ExperimentReport measure_correlation_check(const VarianceProfile& profile, double r, int generation,
                                           std::size_t realizations, std::uint64_t master_seed,
                                           const ExperimentOptions& options = {});

// --- composition laws -------------------------------------------------------

// Conditional GMC over MeasureSamples at (r, n) with the exact-discrete kernel
// (r, a, n), against 1 + R(r+a) and directly simulated M_{r+a}.
ExperimentReport conditional_gmc_experiment(const VarianceProfile& profile, double r, double a, int generation,
                                            std::size_t realizations, std::size_t draws,
                                            std::uint64_t master_seed, const ExperimentOptions& options = {});

// Single-level construction over (r+1, n) vs b^2 independently reweighted
// (r, n-1) samples combined by (1/b) sum_i prod_j.
ExperimentReport renormalization_consistency(const VarianceProfile& profile, double r, double a, int generation,
                                             std::size_t realizations, std::size_t draws,
                                             std::uint64_t master_seed, const ExperimentOptions& options = {});

// Max relative per-cylinder gap between the single-level and composite
// weights for hand-set leaves and field.
double weight_decomposition_audit(const VarianceProfile& profile, double r, double a, int generation,
                                  std::uint64_t master_seed);

// Fractional-moment bound over MeasureSamples at (0, n) with GMC kernel
// r kappa^2 N / n^2, for each r in the grid.
ExperimentReport strong_disorder_bound(const VarianceProfile& profile, const std::vector<double>& r_grid,
                                       int generation, std::size_t realizations, std::size_t draws,
                                       std::uint64_t master_seed, const ExperimentOptions& options = {});

}  // namespace dhl
