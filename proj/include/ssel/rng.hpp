#pragma once

#include <cstdint>
#include <random>

namespace ssel {

// Seeded generator with hand-rolled distributions. The std:: distributions are
// implementation-defined, which would make generated workloads differ between
// standard libraries; the engine itself is fully specified.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound); bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  std::uint64_t range(std::uint64_t lo, std::uint64_t hi) { return lo + below(hi - lo + 1); }

  bool bernoulli(double p) { return uniform() < p; }

  double normal();

  double lognormal(double mu, double sigma);

  Rng fork(std::uint64_t stream) { return Rng(mix(engine_() ^ mix(stream))); }

  static std::uint64_t mix(std::uint64_t x);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ssel
