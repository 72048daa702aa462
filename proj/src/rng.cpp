#include "sdeinfer/rng.hpp"

namespace sdeinfer {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed,
                          std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t state = mix64(seed);
  for (std::uint64_t p : path) state = mix64(state ^ mix64(p + 0x632be59bd9b4e019ULL));
  return state;
}

}  // namespace sdeinfer
