#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mpsim {

// FNV-1a; stable across platforms and compilers.
std::uint64_t stableHash(std::string_view text);

// splitmix64 finalizer applied to a combination of two words.
std::uint64_t mixSeed(std::uint64_t a, std::uint64_t b);

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t draws() const { return draws_; }

  std::uint64_t next();
  // Uniform in [0, 1) with 53 bits of precision.
  double uniform();
  // Uniform integer in [lo, hi].
  int uniformInt(int lo, int hi);
  // Throws BadProbability for p outside [0, 1].
  bool bernoulli(double p);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
};

}  // namespace mpsim
