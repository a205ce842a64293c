#include "hlmgibbs/random.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace hlm {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

std::mt19937_64 seeded_engine(std::uint64_t seed) {
    std::uint64_t state = seed;
    std::array<std::uint32_t, 8> words{};
    for (std::size_t i = 0; i < words.size(); i += 2) {
        const auto z = splitmix64(state);
        words[i] = static_cast<std::uint32_t>(z);
        words[i + 1] = static_cast<std::uint32_t>(z >> 32);
    }
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
}

}

RandomStream::RandomStream(std::uint64_t seed) : seed_(seed), engine_(seeded_engine(seed)) {}

double RandomStream::uniform() {
    // (m + 0.5) / 2^53 lies strictly inside (0, 1)
    const std::uint64_t m = engine_() >> 11;
    return (static_cast<double>(m) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_normal_;
    }
    double v1, v2, s;
    do {
        v1 = 2.0 * uniform() - 1.0;
        v2 = 2.0 * uniform() - 1.0;
        s = v1 * v1 + v2 * v2;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    spare_normal_ = v2 * factor;
    has_spare_ = true;
    return v1 * factor;
}

double RandomStream::gamma(double shape) {
    if (!(shape > 0) || !std::isfinite(shape))
        throw std::domain_error("gamma shape must be positive and finite");
    if (shape < 1.0) {
        // X ~ Gamma(a+1), U^{1/a} X ~ Gamma(a)
        const double x = gamma(shape + 1.0);
        return x * std::pow(uniform(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
}

}
