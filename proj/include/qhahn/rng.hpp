#pragma once

#include <cmath>
#include <cstdint>

namespace qhahn {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Independent per-trial seed from (master, trial); stable across thread counts.
inline std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial) {
    std::uint64_t s = master ^ 0x5851f42d4c957f2dULL;
    splitmix64(s);
    s ^= trial * 0xd1342543de82ef95ULL;
    return splitmix64(s);
}

// xoshiro256++ seeded through splitmix64. Reseeding is four words, which matters when millions of
// short trials each get their own stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 1) { this->seed(seed); }
    void seed(std::uint64_t s) {
        for (auto& w : st_) w = splitmix64(s);
    }

    // uniform in [0,1)
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }
    // uniform in (0,1]
    double uniform_pos() { return double((next() >> 11) + 1) * 0x1.0p-53; }
    double exponential(double rate) { return -std::log(uniform_pos()) / rate; }
    std::uint64_t bits() { return next(); }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t next() {
        const std::uint64_t out = rotl(st_[0] + st_[3], 23) + st_[0];
        const std::uint64_t t = st_[1] << 17;
        st_[2] ^= st_[0];
        st_[3] ^= st_[1];
        st_[1] ^= st_[2];
        st_[0] ^= st_[3];
        st_[2] ^= t;
        st_[3] = rotl(st_[3], 45);
        return out;
    }
    std::uint64_t st_[4];
};

}  // namespace qhahn
