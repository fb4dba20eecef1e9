#ifndef PURCELL_RNG_HPP
#define PURCELL_RNG_HPP

#include <cmath>
#include <cstdint>

namespace purcell {

// Hand-rolled generators instead of <random>: the standard distributions are
// implementation-defined, and reproducibility here must be bit-exact so that
// a (config, seed) pair always produces byte-identical CSV output.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// xoshiro256** seeded through splitmix64, per the reference recipe.
class Xoshiro256 {
public:
    explicit Xoshiro256(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64(sm);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform on [0, 1) with 53 significant bits
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // exponential waiting time for a Poisson process of the given rate
    double exponential(double rate) {
        double u;
        do { u = uniform(); } while (u <= 0.0); // log(0) guard; u = 0 has measure ~2^-53
        return -std::log1p(-u) / rate;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
};

// Independent substream for one Monte Carlo trial. Deriving the stream from
// (seed, trial index) rather than from a worker id makes results independent
// of how trials are partitioned across workers.
inline Xoshiro256 trial_stream(std::uint64_t seed, std::uint64_t trial) {
    std::uint64_t mix = seed ^ (0xD1B54A32D192ED03ull * (trial + 1));
    return Xoshiro256(splitmix64(mix));
}

} // namespace purcell

#endif
