#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hurdlenet {

using Rng = std::mt19937_64;

/// Generator for the named substream (role, index) of a run seed. Streams for
/// different roles or indices are seeded independently, so adding chains does
/// not perturb any other stream.
Rng substream(std::uint64_t seed, std::string_view role, std::uint64_t index = 0);

/// Seed value recorded in manifests for a substream.
std::uint64_t substream_seed(std::uint64_t seed, std::string_view role, std::uint64_t index = 0);

}  // namespace hurdlenet
