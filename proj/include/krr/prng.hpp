#pragma once
#include <cmath>
#include <cstdint>

namespace krr {

// What a stream is used for. Part of the stream key, so e.g. design draws and
// noise draws of the same trial never overlap.
enum class Role : std::uint64_t {
    Design = 1,
    Noise = 2,
    Test = 3,
    Oracle = 4,
    Weights = 5,
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Counter-keyed stream: the generator state is derived purely from
// (seed, trial, role), so disjoint trials give independent substreams and a
// fixed key reproduces the same draws bit for bit, regardless of what other
// streams were consumed in between. xoshiro256++ seeded via splitmix64.
class Prng {
public:
    Prng(std::uint64_t seed, std::uint64_t trial, Role role) {
        std::uint64_t mix = seed;
        mix = splitmix64(mix) ^ (0x6a09e667f3bcc909ULL + trial);
        mix = splitmix64(mix) ^ (0xbb67ae8584caa73bULL * (static_cast<std::uint64_t>(role) + 1));
        std::uint64_t s = splitmix64(mix);
        for (auto& word : state_) word = splitmix64(s);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on (0,1); never returns 0 so logs are safe.
    double uniform() {
        double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        return u > 0.0 ? u : 0x1.0p-53;
    }

    // Standard normal, Box-Muller with a cached spare.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double rademacher() { return (next_u64() & 1u) ? 1.0 : -1.0; }

    // Uniform on [-sqrt(3), sqrt(3)]: mean zero, unit variance.
    double uniform_pm() { return (2.0 * uniform() - 1.0) * 1.7320508075688772935; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t state_[4];
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace krr
