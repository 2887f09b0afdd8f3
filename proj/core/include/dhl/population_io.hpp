#pragma once

// Binary dump of a MassPopulation: little-endian header followed by the
// masses as IEEE doubles.
//
//   "DHLMASS\0" u32 version u32 b f64 r u32 depth u32 seed_kind
//   f64 seed_variance u64 master_seed u32 chunks u32 flags u64 count f64[count]

#include <filesystem>

#include "dhl/cascade.hpp"

namespace dhl {

inline constexpr std::uint32_t kPopulationFormatVersion = 1;

void write_population(const std::filesystem::path& path, const MassPopulation& population);
MassPopulation read_population(const std::filesystem::path& path);

}  // namespace dhl
