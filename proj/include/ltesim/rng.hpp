#pragma once

#include <cstdint>
#include <random>

namespace ltesim {

/// Seeded generator with platform-stable bounded draws.
///
/// std::uniform_int_distribution is implementation-defined, so bounded draws
/// are done here by rejection on top of the (fully specified) mt19937_64.
class Rng
{
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, bound). bound must be non-zero.
    std::uint64_t below(std::uint64_t bound)
    {
        const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % bound;
    }

    /// Uniform in [lo, hi], inclusive.
    std::uint64_t between(std::uint64_t lo, std::uint64_t hi)
    {
        if (hi - lo == UINT64_MAX) {
            return engine_();
        }
        return lo + below(hi - lo + 1);
    }

    bool operator==(const Rng&) const = default;

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used to derive independent per-entity streams.
constexpr std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Stream ids keep entity generators independent of each other's draw counts.
enum class Stream : std::uint64_t
{
    Core = 1,
    CellAllocator = 2,
    Ue = 3,
    Rogue = 4,
};

constexpr std::uint64_t derive_seed(std::uint64_t scenario_seed, Stream stream, std::uint64_t index = 0)
{
    return mix64(mix64(scenario_seed ^ mix64(static_cast<std::uint64_t>(stream))) + index);
}

} // namespace ltesim
