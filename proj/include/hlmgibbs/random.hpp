#pragma once
#include <concepts>
#include <cstdint>
#include <random>

namespace hlm {

/** Source of randomness the sampler templates accept.  Anything providing open-interval
 * uniforms, standard normals and unit-rate gamma variates qualifies; tests use recording stubs.
 */
template <typename G>
concept GibbsRandom = requires(G g, double shape) {
    { g.uniform() } -> std::convertible_to<double>;
    { g.normal() } -> std::convertible_to<double>;
    { g.gamma(shape) } -> std::convertible_to<double>;
};

/** Seeded random stream for one chain.
 *
 * The engine is std::mt19937_64, whose output sequence is fixed by the standard; the seed is
 * expanded through splitmix64 and std::seed_seq so that neighbouring seeds (seed, seed+1, ...)
 * give unrelated streams.  Uniform, normal and gamma variates are generated here rather than with
 * the <random> distributions, whose algorithms are implementation-defined, so a seed reproduces
 * the same chain on every conforming platform.
 */
class RandomStream {
    public:
        explicit RandomStream(std::uint64_t seed);

        std::uint64_t seed() const { return seed_; }

        /// Uniform on the open interval (0, 1), 53 random bits.
        double uniform();
        /// Standard normal (Marsaglia polar method).
        double normal();
        /// Gamma(shape, 1) for any shape > 0 (Marsaglia-Tsang squeeze; boosted for shape < 1).
        double gamma(double shape);

    private:
        std::uint64_t seed_;
        std::mt19937_64 engine_;
        double spare_normal_ = 0;
        bool has_spare_ = false;
};

static_assert(GibbsRandom<RandomStream>);

/// splitmix64 finalizer; used to decorrelate user seeds.
std::uint64_t splitmix64(std::uint64_t& state);

}
