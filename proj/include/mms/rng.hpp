#pragma once

#include <cstdint>
#include <random>

namespace mms {

// mt19937_64 is bit-exact across platforms; the float mapping below avoids
// std::uniform_real_distribution, whose output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // uniform in [0, 1) with 53 random bits
    double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        // modulo bias is irrelevant at the sizes used here (n << 2^64)
        return gen_() % n;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace mms
