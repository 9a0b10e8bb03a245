#pragma once

#include <cstdint>
#include <string_view>

namespace tolnet {

// splitmix64 finalizer
uint64_t mix64(uint64_t x);

uint64_t fnv1a64(std::string_view s);

// Counter-based generator. A stream is keyed by (seed, purpose, indices);
// draws are a pure function of (key, counter), so every consumer gets an
// independent, order-insensitive sequence from one command-level seed.
class RngStream {
 public:
  RngStream(uint64_t seed, std::string_view purpose, uint64_t a = 0, uint64_t b = 0);

  uint64_t next_u64();
  uint64_t below(uint64_t n);  // uniform in [0, n)
  double uniform();            // [0, 1)
  double uniform(double lo, double hi);
  double normal();             // standard normal, Box-Muller

 private:
  uint64_t key_ = 0;
  uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace tolnet
