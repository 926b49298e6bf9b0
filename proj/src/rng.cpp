#include "pushsum/rng.hpp"

namespace pushsum {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t substream_seed(std::uint64_t master, std::uint64_t node, std::uint64_t round,
                             Purpose purpose) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ node);
  h = splitmix64(h ^ round);
  h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
  return h;
}

double uniform_open(Engine& rng) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  double u = 0.0;
  do {
    u = dist(rng);
  } while (u <= 0.0 || u >= 1.0);
  return u;
}

}  // namespace pushsum
