#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace mdf {

// Deterministic random source. std::mt19937_64 is fully specified by the
// standard; the double conversions below avoid std::uniform_real_distribution,
// whose output is implementation-defined, so streams are reproducible across
// toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller (fixed evaluation order).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // Uniform integer in [0, n), n >= 1. Rejection-free modulo is fine here:
    // n is tiny compared to 2^64, bias is unobservable at our scales.
    std::size_t below(std::size_t n) {
        return static_cast<std::size_t>(gen_() % static_cast<std::uint64_t>(n));
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = i;
        shuffle(p);
        return p;
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// splitmix64 step; used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = mix_seed(base);
    s = mix_seed(s ^ a);
    s = mix_seed(s ^ b);
    s = mix_seed(s ^ c);
    return s;
}

}  // namespace mdf
