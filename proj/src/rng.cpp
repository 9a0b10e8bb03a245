#include "tolnet/rng.hpp"

#include <cmath>

namespace tolnet {

uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RngStream::RngStream(uint64_t seed, std::string_view purpose, uint64_t a, uint64_t b) {
  key_ = mix64(seed ^ fnv1a64(purpose));
  key_ = mix64(key_ ^ mix64(a ^ 0x5851f42d4c957f2dULL));
  key_ = mix64(key_ ^ mix64(b ^ 0x14057b7ef767814fULL));
}

uint64_t RngStream::next_u64() { return mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

uint64_t RngStream::below(uint64_t n) {
  return static_cast<uint64_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

double RngStream::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  double u2 = uniform();
  if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 6.283185307179586476925286766559 * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

}  // namespace tolnet
