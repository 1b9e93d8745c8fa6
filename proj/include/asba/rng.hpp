#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace asba {

// 64-bit FNV-1a, used for corpus/config hashing and rng stream derivation.
uint64_t fnv1a64(std::string_view bytes, uint64_t seed = 1469598103934665603ULL);
std::string to_hex(uint64_t v);

// Deterministic xoshiro256** generator with explicit double/normal sampling,
// so results are identical across platforms and standard libraries. Streams
// are split hierarchically: child("mining") derives an independent stream.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64();
  // uniform in [0, 1), 53-bit resolution
  double uniform();
  // uniform in [lo, hi)
  double uniform(double lo, double hi);
  // uniform integer in [0, bound)
  uint64_t uniform_int(uint64_t bound);
  // standard normal via Box-Muller (deterministic, caches the spare value)
  double normal();

  Rng child(std::string_view label) const;
  Rng child(uint64_t tag) const;

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct values from [0, n), ascending
  std::vector<int> sample_without_replacement(int n, int k);

 private:
  uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace asba
