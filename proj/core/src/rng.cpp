#include "robreg/rng.hpp"

#include <cmath>

namespace robreg {

namespace {

std::uint64_t splitmix64(std::uint64_t& s) {
  s += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

constexpr double kInv53 = 1.0 / 9007199254740992.0;  // 2^-53

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t s = seed;
  for (auto& word : state_) word = splitmix64(s);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::uniform01() { return static_cast<double>(next_u64() >> 11) * kInv53; }

double Rng::uniform_pos() {
  return (static_cast<double>(next_u64() >> 11) + 1.0) * kInv53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  const double u1 = uniform_pos();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 6.283185307179586476925286766559 * u2;
  spare_normal_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

double Rng::rademacher() { return (next_u64() & 1ULL) ? 1.0 : -1.0; }

double Rng::laplace(double scale) {
  const double u = uniform01() - 0.5;
  const double mag = std::log(1.0 - 2.0 * std::abs(u));
  return (u >= 0.0 ? -scale : scale) * mag;
}

double Rng::student_t(int df) {
  const double z = normal();
  double chi2 = 0.0;
  for (int k = 0; k < df; ++k) {
    const double g = normal();
    chi2 += g * g;
  }
  return z / std::sqrt(chi2 / static_cast<double>(df));
}

std::uint64_t Rng::below(std::uint64_t bound) {
  // Rejection sampling to avoid modulo bias.
  const std::uint64_t limit = bound * (UINT64_MAX / bound);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % bound;
}

std::uint64_t Rng::derive_stream(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b) {
  std::uint64_t s = master;
  std::uint64_t out = splitmix64(s);
  s ^= (a + 0x165667B19E3779F9ULL) * 0xFF51AFD7ED558CCDULL;
  out ^= splitmix64(s);
  s ^= (b + 0x27D4EB2F165667C5ULL) * 0xC4CEB9FE1A85EC53ULL;
  out ^= splitmix64(s);
  return out;
}

}  // namespace robreg
