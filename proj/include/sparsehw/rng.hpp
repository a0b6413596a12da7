#pragma once

#include <cstdint>

namespace sparsehw {

// xoshiro256++ with splitmix64 seeding. Replicate streams are derived purely
// from (seed, stream index), so results are independent of how replicates are
// scheduled across workers. Distribution samplers are hand-rolled so output is
// identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) { reseed(seed, 0); }
    Rng(std::uint64_t seed, std::uint64_t stream_id) { reseed(seed, stream_id); }

    static Rng stream(std::uint64_t seed, std::uint64_t stream_id) {
        return Rng(seed, stream_id);
    }

    std::uint64_t next_u64();

    // Uniform on [0,1) with 53 random bits.
    double uniform01();
    // Uniform on (0,1); safe as a log/quantile argument.
    double uniform_open01();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    // Standard normal via Box-Muller; the second draw of each pair is cached.
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }

    // Marsaglia-Tsang for shape >= 1, boosted for shape < 1. Unit scale.
    double gamma(double shape);

    // Degenerate shapes are allowed: a == 0 returns 0, b == 0 returns 1.
    double beta(double a, double b);

private:
    void reseed(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t s_[4];
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace sparsehw
