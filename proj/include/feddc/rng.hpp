#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "feddc/errors.hpp"

namespace feddc {

// All randomness in the project flows through one portable generator so that
// every experiment is reproducible from a single master seed, independent of
// platform and standard-library version (std::* distributions are not
// specified bit-for-bit). Per-purpose streams are derived with stream_seed()
// so that adding a consumer in one place never shifts the draws of another.

// splitmix64 step; used for seed expansion and hashing.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derive the seed of an independent stream from (master seed, purpose tag,
// index). Stable across runs and platforms.
std::uint64_t stream_seed(std::uint64_t master, std::string_view tag,
                          std::uint64_t index = 0);

// xoshiro256++ with hand-rolled uniform / normal / shuffle so the byte
// stream of an experiment is fully pinned by the code in this header.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform in [0, 1), 53-bit resolution.
    double uniform();
    // Uniform in [lo, hi).
    double uniform(double lo, double hi);
    // Uniform integer in [0, n), unbiased (rejection sampling). n > 0.
    std::uint64_t uniform_below(std::uint64_t n);
    // Standard normal via Box-Muller; two uniforms per call, no cached state.
    double normal();
    double normal(double mean, double stddev);
    // Uniform random permutation of {0, ..., n-1} (Fisher-Yates).
    std::vector<std::size_t> permutation(std::size_t n);

    // Fisher-Yates shuffle of an arbitrary sequence.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    // Draw k distinct indices from {0, ..., n-1} without replacement.
    std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                        std::size_t k);

private:
    std::array<std::uint64_t, 4> state_;
};

// Convenience: generator for a derived stream.
inline Rng stream_rng(std::uint64_t master, std::string_view tag,
                      std::uint64_t index = 0) {
    return Rng(stream_seed(master, tag, index));
}

} // namespace feddc
