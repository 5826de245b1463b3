#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace leafeon {

/// Derives an independent 64-bit seed for a named sub-stream
/// ("scene", "noise", "init", "shuffle", ...) of an experiment seed.
/// Extra indices select e.g. a sample or a steering angle within the stream.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                          std::initializer_list<std::uint64_t> indices = {});

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t master, std::string_view stream,
                    std::initializer_list<std::uint64_t> indices = {}) {
  return Rng(derive_seed(master, stream, indices));
}

}  // namespace leafeon
