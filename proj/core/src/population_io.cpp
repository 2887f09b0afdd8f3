#include "dhl/population_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "dhl/errors.hpp"

namespace dhl {

namespace {

static_assert(std::endian::native == std::endian::little, "population files assume a little-endian host");

constexpr char kMagic[8] = {'D', 'H', 'L', 'M', 'A', 'S', 'S', '\0'};
constexpr std::uint32_t kFlagRenormalized = 1u;

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw UsageError("population file is truncated");
  return value;
}

}  // namespace

void write_population(const std::filesystem::path& path, const MassPopulation& population) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot open " + path.string() + " for writing");
  const auto& p = population.provenance;
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kPopulationFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(p.b));
  put<double>(out, p.r);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(p.iterations));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(p.seed.kind));
  put<double>(out, p.seed.variance);
  put<std::uint64_t>(out, p.master_seed);
  put<std::uint32_t>(out, p.chunks);
  put<std::uint32_t>(out, p.renormalized ? kFlagRenormalized : 0u);
  put<std::uint64_t>(out, population.masses.size());
  out.write(reinterpret_cast<const char*>(population.masses.data()),
            static_cast<std::streamsize>(population.masses.size() * sizeof(double)));
  if (!out) throw UsageError("write to " + path.string() + " failed");
}

MassPopulation read_population(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw UsageError(path.string() + " is not a population file");
  if (get<std::uint32_t>(in) != kPopulationFormatVersion) throw UsageError("unsupported population file version");
  MassPopulation pop;
  auto& p = pop.provenance;
  p.b = static_cast<int>(get<std::uint32_t>(in));
  p.r = get<double>(in);
  p.iterations = static_cast<int>(get<std::uint32_t>(in));
  p.r0 = p.r - p.iterations;
  const auto kind = get<std::uint32_t>(in);
  if (kind > static_cast<std::uint32_t>(SeedKind::kTwoPoint)) throw UsageError("bad seed kind in population file");
  const double variance = get<double>(in);
  p.seed = SeedSpec(static_cast<SeedKind>(kind), variance);
  p.master_seed = get<std::uint64_t>(in);
  p.chunks = get<std::uint32_t>(in);
  p.renormalized = (get<std::uint32_t>(in) & kFlagRenormalized) != 0;
  const auto count = get<std::uint64_t>(in);
  pop.masses.resize(count);
  in.read(reinterpret_cast<char*>(pop.masses.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw UsageError("population file is truncated");
  for (double m : pop.masses) {
    if (!std::isfinite(m)) ++pop.overflow_count;
  }
  return pop;
}

}  // namespace dhl
