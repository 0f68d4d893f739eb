#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace spotvol {

/// 64-bit Mersenne Twister. Its output sequence is fixed by the C++ standard,
/// and the Boost distributions below are implementation-independent, so draws
/// are reproducible across platforms for a given seed.
using Rng = std::mt19937_64;

/// Derives an independent generator for (seed, stream ids...) via seed_seq.
inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream = {}) {
    std::vector<std::uint32_t> words;
    words.reserve(2 + 2 * stream.size());
    words.push_back(static_cast<std::uint32_t>(seed));
    words.push_back(static_cast<std::uint32_t>(seed >> 32));
    for (auto s : stream) {
        words.push_back(static_cast<std::uint32_t>(s));
        words.push_back(static_cast<std::uint32_t>(s >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

/// Derives a child seed, used where a sub-task needs a plain seed value.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> stream) {
    auto rng = make_rng(seed, stream);
    return rng();
}

inline double std_normal(Rng& rng) {
    boost::random::normal_distribution<double> dist(0.0, 1.0);
    return dist(rng);
}

inline double uniform01(Rng& rng) {
    boost::random::uniform_01<double> dist;
    return dist(rng);
}

}  // namespace spotvol
