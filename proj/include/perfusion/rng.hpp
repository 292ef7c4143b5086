// Seeded random number streams with pinned transforms.
//
// All randomness in the library flows through Rng. The generator is
// std::mt19937_64 (its output sequence is fixed by the standard) and the
// uniform/normal transforms below are hand-rolled, so a given seed yields
// the same draws on every platform and across reruns.
//
// Stream derivation: derive_stream(base, tag, index) mixes a base seed with
// a stage tag and an item index through splitmix64. Parallel code derives
// one stream per item, which makes results independent of thread count.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace perfusion {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_stream(std::uint64_t base, std::uint64_t tag, std::uint64_t index) {
    return splitmix64(splitmix64(base ^ tag) ^ index);
}

// Stage tags for derive_stream. Arbitrary distinct constants.
namespace seed_tag {
inline constexpr std::uint64_t aif_params = 0x6169665f70617261ULL;
inline constexpr std::uint64_t sample = 0x73616d706c650000ULL;
inline constexpr std::uint64_t augment = 0x6175676d656e7400ULL;
inline constexpr std::uint64_t model_init = 0x6d6f64656c5f696eULL;
inline constexpr std::uint64_t train_stream = 0x747261696e5f7374ULL;
inline constexpr std::uint64_t tune_subsample = 0x74756e655f737562ULL;
inline constexpr std::uint64_t train_data = 0x747261696e5f6461ULL;
inline constexpr std::uint64_t test_data = 0x746573745f646174ULL;
} // namespace seed_tag

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [lo, hi], inclusive.
    int uniform_int(int lo, int hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        auto k = static_cast<std::uint64_t>(uniform01() * static_cast<double>(span));
        if (k >= span) k = span - 1;
        return lo + static_cast<int>(k);
    }

    // Standard normal via Box-Muller. Consumes exactly two uniforms per call;
    // no cached spare, so the draw count stays predictable.
    double normal() {
        const double u1 = 1.0 - uniform01(); // (0, 1], keeps log finite
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

private:
    std::mt19937_64 gen_;
};

} // namespace perfusion
