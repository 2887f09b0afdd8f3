#include "dhl/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dhl/errors.hpp"
#include "parallel.hpp"

namespace dhl {

namespace {

void renormalize(std::vector<double>& xs) {
  long double sum = 0.0L;
  for (double x : xs) sum += x;
  const long double mean = sum / xs.size();
  if (!(mean > 0.0L) || !std::isfinite(mean)) throw OverflowError("population mean left (0, inf)");
  for (double& x : xs) x = static_cast<double>(x / mean);
}

std::uint64_t count_nonfinite(const std::vector<double>& xs) {
  return static_cast<std::uint64_t>(std::count_if(xs.begin(), xs.end(), [](double x) { return !std::isfinite(x); }));
}

}  // namespace

MassPopulation evolve_population(const MassPopulation& population, std::uint64_t master_seed,
                                 std::uint64_t iteration, const EvolveOptions& options) {
  const std::size_t size = population.masses.size();
  if (size == 0) throw UsageError("cannot evolve an empty population");
  const int b = population.provenance.b;
  MassPopulation out;
  out.provenance = population.provenance;
  out.provenance.r += 1.0;
  out.provenance.iterations += 1;
  out.provenance.chunks = options.chunks;
  out.provenance.renormalized = population.provenance.renormalized || options.renormalize;
  out.masses.resize(size);
  const double* in = population.masses.data();
  detail::for_each_chunk(size, options.chunks, options.threads, [&](std::uint32_t chunk, std::size_t begin, std::size_t end) {
    auto rng = rng::Stream::derive(master_seed, rng::Domain::kPopulationStep, iteration, chunk);
    for (std::size_t k = begin; k < end; ++k) {
      double sum = 0.0;
      for (int i = 0; i < b; ++i) {
        double product = 1.0;
        for (int j = 0; j < b; ++j) product *= in[rng.below(size)];
        sum += product;
      }
      out.masses[k] = sum / b;
    }
  });
  if (options.renormalize) renormalize(out.masses);
  out.overflow_count = count_nonfinite(out.masses);
  return out;
}

MassPopulation simulate_mass_law(const VarianceProfile& profile, double r, SeedKind seed, int depth,
                                 std::size_t size, std::uint64_t master_seed, const EvolveOptions& options) {
  if (depth < 1) throw UsageError("population depth must be >= 1");
  if (size < static_cast<std::size_t>(profile.b) * profile.b) {
    throw UsageError("population size must be at least b^2");
  }
  const double r0 = r - depth;
  if (r0 > kMaxPopulationSeedLevel) {
    throw UsageError("seed level r - depth = " + std::to_string(r0) + " must be <= " +
                     std::to_string(kMaxPopulationSeedLevel) + "; increase depth");
  }
  const SeedSpec spec(seed, static_cast<double>(evaluate_R(profile, r0)));
  MassPopulation population;
  population.provenance = {profile.b, r0, r0, 0, spec, master_seed, options.chunks, options.renormalize};
  population.masses.resize(size);
  detail::for_each_chunk(size, options.chunks, options.threads, [&](std::uint32_t chunk, std::size_t begin, std::size_t end) {
    auto rng = rng::Stream::derive(master_seed, rng::Domain::kPopulationSeed, 0, chunk);
    for (std::size_t k = begin; k < end; ++k) population.masses[k] = spec.sample(rng);
  });
  for (int step = 0; step < depth; ++step) {
    population = evolve_population(population, master_seed, static_cast<std::uint64_t>(step), options);
  }
  population.provenance.r = r;
  return population;
}

stats::Estimate fractional_moment(const MassPopulation& population, double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw UsageError("fractional moment order must lie in (0, 1]");
  std::vector<double> powered(population.masses.size());
  std::transform(population.masses.begin(), population.masses.end(), powered.begin(),
                 [theta](double x) { return theta == 1.0 ? x : std::pow(x, theta); });
  return stats::mean(powered);
}

double MeasureSample::total() const {
  long double sum = 0.0L;
  for (double m : masses) sum += m;
  return static_cast<double>(sum);
}

double additivity_residual(const MeasureSample& sample) {
  const double total = sample.total();
  const double scale = std::max(std::fabs(total), std::fabs(sample.tracked_total));
  return scale == 0.0 ? 0.0 : std::fabs(total - sample.tracked_total) / scale;
}

MeasureSampler::MeasureSampler(const VarianceProfile& profile, double r, int generation, int depth, SeedKind seed,
                               std::uint64_t master_seed, std::size_t leaf_population_size,
                               const EvolveOptions& options)
    : params_(profile.b, profile.b), r_(r), generation_(generation), depth_(depth), seed_(seed),
      master_seed_(master_seed) {
  if (generation < 1) throw UsageError("measure samples need generation >= 1");
  if (depth < generation) throw UsageError("depth must be >= generation");
  const mpz_class paths = exact_path_count(params_, generation);
  if (paths > mpz_class(static_cast<unsigned long>(kCylinderBudget))) {
    int limit = 0;
    while (exact_path_count(params_, limit + 1) <= mpz_class(static_cast<unsigned long>(kCylinderBudget))) ++limit;
    throw UsageError("|Gamma_" + std::to_string(generation) + "| exceeds the cylinder budget of " +
                     std::to_string(kCylinderBudget) + "; largest feasible generation for b=" +
                     std::to_string(params_.b) + " is " + std::to_string(limit));
  }
  leaf_population_ = simulate_mass_law(profile, r - generation, seed, depth - generation, leaf_population_size,
                                       rng::mix64(master_seed ^ 0x6c656166ull), options);
}

namespace {

struct Assembled {
  std::vector<double> masses;
  double total = 0.0;
};

// Generation-k vector from the (bs)^k leaves in edge order: block (i, j)
// owns leaves [((i s + j) (bs)^{k-1}, ...) and yields M^{(i,j)}.
Assembled assemble_level(const LatticeParams& params, std::span<const double> leaves, int k) {
  if (k == 0) return {{leaves[0]}, leaves[0]};
  const std::size_t block = leaves.size() / (static_cast<std::size_t>(params.b) * params.s);
  Assembled out;
  double total = 0.0;
  for (int i = 0; i < params.b; ++i) {
    std::vector<double> branch{1.0 / params.b};
    double branch_total = 1.0;
    for (int j = 0; j < params.s; ++j) {
      const auto sub = assemble_level(params, leaves.subspan((static_cast<std::size_t>(i) * params.s + j) * block, block), k - 1);
      std::vector<double> next(branch.size() * sub.masses.size());
      for (std::size_t a = 0; a < branch.size(); ++a) {
        for (std::size_t q = 0; q < sub.masses.size(); ++q) next[a * sub.masses.size() + q] = branch[a] * sub.masses[q];
      }
      branch = std::move(next);
      branch_total *= sub.total;
    }
    total += branch_total;
    out.masses.insert(out.masses.end(), branch.begin(), branch.end());
  }
  out.total = total / params.b;
  return out;
}

}  // namespace

MeasureSample assemble_measure_sample(const LatticeParams& params, double r, int generation,
                                      std::vector<double> leaves) {
  if (leaves.size() != edge_count(params, generation)) throw UsageError("need one leaf per generation-n edge");
  auto built = assemble_level(params, leaves, generation);
  MeasureSample sample;
  sample.params = params;
  sample.r = r;
  sample.generation = generation;
  sample.masses = std::move(built.masses);
  sample.tracked_total = built.total;
  sample.leaves = std::move(leaves);
  sample.provenance.b = params.b;
  sample.provenance.r = r;
  sample.provenance.generation = generation;
  return sample;
}

MeasureSample MeasureSampler::assemble(std::vector<double> leaves) const {
  MeasureSample sample = assemble_measure_sample(params_, r_, generation_, std::move(leaves));
  sample.provenance = {params_.b, r_, generation_, depth_, seed_, master_seed_, 0,
                       leaf_population_.masses.size()};
  return sample;
}

MeasureSample MeasureSampler::sample(std::uint64_t realization) const {
  auto rng = rng::Stream::derive(master_seed_, rng::Domain::kMeasureLeaves, realization);
  const auto& pool = leaf_population_.masses;
  std::vector<double> leaves(edge_count(params_, generation_));
  for (auto& leaf : leaves) leaf = pool[rng.below(pool.size())];
  MeasureSample out = assemble(std::move(leaves));
  out.provenance.realization = realization;
  return out;
}

MeasureSample sample_measure_cylinders(const VarianceProfile& profile, double r, int generation, int depth,
                                       SeedKind seed, std::uint64_t master_seed) {
  return MeasureSampler(profile, r, generation, depth, seed, master_seed).sample(0);
}

}  // namespace dhl
