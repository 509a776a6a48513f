#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace denselm {

// Seedable, portable PRNG. All draws are derived from the raw 64-bit engine
// output, never from std:: distributions, so streams are identical across
// platforms and compilers. Components obtain independent streams via
// split("name"), which hashes the parent seed with the stream name.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  // Independent child stream derived from this generator's seed and a name.
  // Splitting does not advance the parent state.
  Rng split(std::string_view stream) const;

  uint64_t next_u64();
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  double normal();                       // standard normal, Box-Muller
  int uniform_int(int n);                // [0, n), n >= 1
  bool bernoulli(double p);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      int j = uniform_int(i + 1);
      std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(j)]);
    }
  }

  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_;
  uint64_t state_[4];
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace denselm
