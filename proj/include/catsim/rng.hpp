#pragma once

#include <cstdint>
#include <random>

namespace catsim {

// splitmix64, used to derive independent per-run seeds from a master seed.
// Derivation is `derive_seed(master, index)` with the documented constant
// 0x9E3779B97F4A7C15 so that partial re-runs of an ensemble are stable.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t run_index) {
    return splitmix64(master_seed ^ (0x9E3779B97F4A7C15ull * (run_index + 1)));
}

// Deterministic engine. mt19937_64 output is fixed by the standard, so
// results are reproducible across platforms as long as we avoid
// distribution classes (whose algorithms are implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // uniform double in [0, 1) with 53 random bits
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t raw() { return eng_(); }

private:
    std::mt19937_64 eng_;
};

}  // namespace catsim
