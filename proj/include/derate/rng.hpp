#pragma once

#include <cstdint>
#include <random>

namespace derate {

// splitmix64; used to derive independent sub-stream seeds from one seed.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t seed_combine(uint64_t seed, uint64_t a) {
  return splitmix64(seed ^ splitmix64(a));
}

inline uint64_t seed_combine(uint64_t seed, uint64_t a, uint64_t b) {
  return seed_combine(seed_combine(seed, a), b);
}

// mt19937_64 with hand-rolled draws. The engine's output sequence is fixed
// by the standard; std::uniform_* distributions are not, so they are not
// used anywhere.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // uniform in [0, 1)
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

  // uniform integer in [0, n)
  size_t index(size_t n) { return static_cast<size_t>(uniform() * n); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace derate
