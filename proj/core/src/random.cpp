#include "leafeon/random.hpp"

namespace leafeon {
namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                          std::initializer_list<std::uint64_t> indices) {
  // FNV-1a over the stream name, then fold indices through splitmix.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : stream) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  std::uint64_t state = splitmix64(master ^ splitmix64(h));
  for (std::uint64_t idx : indices) {
    state = splitmix64(state ^ splitmix64(idx + 0x632BE59BD9B4E019ULL));
  }
  return state;
}

}  // namespace leafeon
