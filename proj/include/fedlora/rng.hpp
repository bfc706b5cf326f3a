#pragma once

#include <cstdint>
#include <vector>

namespace fedlora {

// xoshiro256** seeded via splitmix64. Platform-independent by construction:
// no standard-library distributions are used anywhere, so equal seeds give
// equal streams on every compiler and OS.
class Rng {
   public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform double in [0, 1), 53 bits of randomness.
    double uniform();

    // Unbiased integer in [0, n), rejection sampled.
    std::uint64_t below(std::uint64_t n);

    // Standard normal via Box-Muller (cosine branch; two uniforms per draw).
    double normal();

    // Gamma(alpha, 1) via Marsaglia-Tsang; alpha < 1 handled by boosting.
    double gamma(double alpha);

    // Shuffle indices in place (Fisher-Yates).
    void shuffle(std::vector<std::size_t>& v);

    // Independent child stream. Derived from the construction seed and the
    // stream id only, so the derivation is insensitive to how many draws
    // were taken from the parent.
    Rng child(std::uint64_t stream) const;

    std::uint64_t seed() const { return seed_; }

   private:
    std::uint64_t seed_;
    std::uint64_t s_[4];
};

}  // namespace fedlora
