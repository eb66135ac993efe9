#ifndef SWARMSIM_RNG_HPP
#define SWARMSIM_RNG_HPP

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace swarmsim {

// The standard distributions are implementation-defined, so every draw that
// feeds the ledger goes through these helpers instead. That keeps ledgers
// byte-identical across standard libraries, not just across executions.
using Rng = std::mt19937_64;

/// Uniform integer in [0, bound). `bound` must be > 0.
inline std::size_t uniform_index(Rng& rng, std::size_t bound)
{
    const std::uint64_t n = bound;
    const std::uint64_t limit = Rng::max() - (Rng::max() % n) - 1;
    std::uint64_t draw = rng();
    while (draw > limit)
        draw = rng();
    return static_cast<std::size_t>(draw % n);
}

/// Uniform double in [0, 1) with 53 bits of mantissa.
inline double uniform_unit(Rng& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename T>
void shuffle(std::span<T> items, Rng& rng)
{
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = uniform_index(rng, i);
        using std::swap;
        swap(items[i - 1], items[j]);
    }
}

} // namespace swarmsim

#endif
