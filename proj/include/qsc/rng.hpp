#ifndef QSC_RNG_HPP
#define QSC_RNG_HPP

#include <cstdint>
#include <random>

namespace qsc {

// splitmix64; used to derive independent per-trajectory streams from (seed, index)
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stream i of a seeded family. Results are identical no matter how trajectories
// are distributed over worker threads.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t s = splitmix64(seed ^ splitmix64(index + 0x51ed2701));
    return std::mt19937_64(s);
}

} // namespace qsc

#endif
