#ifndef NETDR_RNG_HPP
#define NETDR_RNG_HPP

#include <cstdint>
#include <random>

namespace netdr {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Independent stream derived from (seed, stream). Streams with distinct ids are
// decorrelated, so parallel workers can each own one.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t s = seed ^ (0x2545f4914f6cdd1dull * (stream + 1));
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
}

// Uniform in [0,1) from the top 53 bits; avoids std::uniform_real_distribution
// so streams are bit-identical across standard library versions.
inline double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(std::mt19937_64& gen, double p) {
    return uniform01(gen) < p;
}

} // namespace netdr

#endif
