#include "mpsim/rng.hpp"

#include <string>

#include "mpsim/error.hpp"

namespace mpsim {

std::uint64_t stableHash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t mixSeed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

RngStream::RngStream(std::uint64_t seed, std::string_view stream_id)
    : seed_(mixSeed(seed, stableHash(stream_id))), engine_(seed_) {}

std::uint64_t RngStream::next() {
  ++draws_;
  return engine_();
}

double RngStream::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

int RngStream::uniformInt(int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(next() % span);
}

bool RngStream::bernoulli(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw BadProbability("probability " + std::to_string(p) + " outside [0,1]");
  }
  if (p == 0.0) return false;
  if (p == 1.0) return true;
  return uniform() < p;
}

}  // namespace mpsim
