#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace repartee {

// Error categories map onto CLI exit codes: usage=1, data=2, numeric=3.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Deterministic generator with hand-mapped draws; identical streams on every
// platform and standard library (std::uniform_* distributions are not
// portable across implementations).
class Rng {
 public:
  explicit Rng(uint64_t seed)
      : seed_(seed), state_(splitmix64(seed ^ 0x853c49e6748fea9bULL)) {
    if (state_ == 0) state_ = 0x9e3779b97f4a7c15ULL;
  }

  uint64_t next_u64() {
    // xorshift* over a splitmix-seeded state
    uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545f4914f6cdd1dULL;
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  uint64_t uniform_int(uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

  // Independent stream for a named purpose, derived from the construction
  // seed; does not depend on how many draws were made.
  Rng derive(const std::string& tag) const {
    return Rng(splitmix64(seed_ ^ fnv1a64(tag)));
  }

  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_;
  uint64_t state_;
};

}  // namespace repartee
