#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace cellfree {

// Counter-style seed derivation: every random stream in the simulator is
// keyed by an explicit chain of integers (master seed, purpose tag, indices)
// so that runs are reproducible and sweep cells are independent jobs.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_tag(std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t seed_chain(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = splitmix64(seed);
    for (std::uint64_t p : path) s = splitmix64(s ^ splitmix64(p));
    return s;
}

inline std::uint64_t seed_chain(std::uint64_t seed, std::string_view tag,
                                std::initializer_list<std::uint64_t> path = {}) {
    std::uint64_t s = splitmix64(seed ^ splitmix64(hash_tag(tag)));
    for (std::uint64_t p : path) s = splitmix64(s ^ splitmix64(p));
    return s;
}

// mt19937_64 plus hand-rolled Box-Muller. std distributions are not
// bit-stable across standard libraries; these transforms are.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // in [0, 1)
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t raw() { return eng_(); }

    // standard normal, one value per Box-Muller pair (the sine half is dropped)
    double gaussian() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    // circularly-symmetric complex Gaussian with E|x|^2 = var
    std::complex<double> cgaussian(double var) {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-std::log(u1) * var);
        const double ang = 6.283185307179586476925287 * u2;
        return {r * std::cos(ang), r * std::sin(ang)};
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace cellfree
