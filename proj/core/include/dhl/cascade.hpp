#pragma once

// Monte Carlo realizations of the total-mass law M_r(Gamma) (population
// dynamics on X' = (1/b) sum_i prod_j X_ij) and of whole cylinder-mass vectors
// of M_r at a finite generation.

#include <cstdint>
#include <vector>

#include "dhl/lattice.hpp"
#include "dhl/rfunction.hpp"
#include "dhl/seed_spec.hpp"
#include "dhl/stats.hpp"

namespace dhl {

struct PopulationProvenance {
  int b = 2;
  double r = 0.0;
  double r0 = 0.0;  // level of the seed draws
  int iterations = 0;
  SeedSpec seed;
  std::uint64_t master_seed = 0;
  std::uint32_t chunks = 0;
  bool renormalized = false;
};

struct MassPopulation {
  std::vector<double> masses;
  PopulationProvenance provenance;
  std::uint64_t overflow_count = 0;  // non-finite entries (kept, not dropped)

  double r() const { return provenance.r; }
};

inline constexpr std::uint32_t kDefaultChunks = 64;

struct EvolveOptions {
  unsigned threads = 1;  // 0 = hardware concurrency
  std::uint32_t chunks = kDefaultChunks;
  // Divide the output by its sample mean. Without it, a relative mean error
  // e becomes roughly b e at the next step and the run drifts off exponentially.
  bool renormalize = false;
};

// One resampling step r -> r+1. Output chunk c draws from the substream
// (master_seed, step, iteration, c), so the result depends on the chunk count
// but not on the thread count.
MassPopulation evolve_population(const MassPopulation& population, std::uint64_t master_seed,
                                 std::uint64_t iteration, const EvolveOptions& options = {});

// Seeds `size` draws at r0 = r - depth with variance R(r0), then applies
// `depth` population steps.
MassPopulation simulate_mass_law(const VarianceProfile& profile, double r, SeedKind seed, int depth,
                                 std::size_t size, std::uint64_t master_seed,
                                 const EvolveOptions& options = {1, kDefaultChunks, true});

inline constexpr int kDefaultPopulationDepth = 24;
// Seeds must sit at or below this level so the seed variance is small.
inline constexpr double kMaxPopulationSeedLevel = -16.0;

stats::Estimate fractional_moment(const MassPopulation& population, double theta);

struct MeasureProvenance {
  int b = 2;
  double r = 0.0;
  int generation = 0;
  int depth = 0;
  SeedKind seed = SeedKind::kTwoPoint;
  std::uint64_t master_seed = 0;
  std::uint64_t realization = 0;
  std::size_t leaf_population_size = 0;
};

struct MeasureSample {
  LatticeParams params;
  double r = 0.0;
  int generation = 0;
  // Cylinder masses over Gamma_n in cylinder_index order.
  std::vector<double> masses;
  // Total masses at level r - n attached to the (bs)^n generation-n edges.
  std::vector<double> leaves;
  // Total assembled alongside the masses via (1/b) sum_i prod_j T_ij.
  double tracked_total = 0.0;
  MeasureProvenance provenance;

  double total() const;
};

// Cylinder masses over Gamma_n from one total mass per generation-n edge:
// M(i; q_1..q_s) = (1/b) prod_j M^{(i,j)}(q_j), recursively, so that
// M(p) = prod_{e in p} leaf_e / |Gamma_n|.
MeasureSample assemble_measure_sample(const LatticeParams& params, double r, int generation,
                                      std::vector<double> leaves);

// Largest |Gamma_n| we are willing to materialize.
inline constexpr std::uint64_t kCylinderBudget = std::uint64_t{1} << 20;

// Draws MeasureSamples at (r, n). The leaf population at r - n (depth m - n)
// is simulated once; realization i then resamples its (bs)^n leaves from it
// with stream (master_seed, leaves, i) and assembles the vector level by level.
class MeasureSampler {
 public:
  MeasureSampler(const VarianceProfile& profile, double r, int generation, int depth, SeedKind seed,
                 std::uint64_t master_seed, std::size_t leaf_population_size = 1'000'000,
                 const EvolveOptions& options = {1, kDefaultChunks, true});

  MeasureSample sample(std::uint64_t realization) const;
  // Assembles a sample from explicit leaf masses (one per generation-n edge).
  MeasureSample assemble(std::vector<double> leaves) const;

  const MassPopulation& leaf_population() const { return leaf_population_; }
  const LatticeParams& params() const { return params_; }
  int generation() const { return generation_; }
  double r() const { return r_; }

 private:
  LatticeParams params_;
  double r_;
  int generation_;
  int depth_;
  SeedKind seed_;
  std::uint64_t master_seed_;
  MassPopulation leaf_population_;
};

MeasureSample sample_measure_cylinders(const VarianceProfile& profile, double r, int generation, int depth,
                                       SeedKind seed, std::uint64_t master_seed);

// Relative gap between tracked_total and the sum of the cylinder masses.
double additivity_residual(const MeasureSample& sample);

}  // namespace dhl
