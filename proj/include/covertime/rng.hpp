#pragma once

#include <cstdint>

namespace covertime {

/// Counter-based splittable random stream. Output i of replication r under
/// master seed s is a pure function of (s, r, i), so replications can run in
/// any order (or in parallel) with identical results.
class SplitStream {
  public:
    SplitStream(std::uint64_t master, std::uint64_t replication)
        : key_(mix(mix(master ^ 0x9e3779b97f4a7c15ULL) ^ replication)) {}

    std::uint64_t next() { return mix(key_ + (++counter_) * kGamma); }

    /// Uniform in [0, 1).
    double next_unit() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    /// Uniform in {0, .., bound-1} by rejection (no modulo bias).
    std::uint64_t next_below(std::uint64_t bound) {
        const std::uint64_t limit = bound * ((~0ULL) / bound);
        std::uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return x % bound;
    }

    static std::uint64_t mix(std::uint64_t z) {
        z += kGamma;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

  private:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace covertime
